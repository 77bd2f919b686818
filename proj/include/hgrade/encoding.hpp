#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hgrade/backend.hpp"
#include "hgrade/corpus.hpp"

namespace hgrade {

// Two-sentence model input (original ‖ edited) for one record, with the
// positions of the replacement word's tokens inside the edited segment.
struct EncodedPair {
  std::string record_id;
  PairEncoding enc;
  int edited_segment = 1;                    // which segment holds the edited headline
  std::vector<int> edited_token_positions;   // token indices of the replacement word
  std::vector<int> original_token_positions; // token indices of the replaced word
  bool edit_dropped = false;                 // truncation removed every edited token

  const TokenizedInput& input() const { return enc.input; }
};

struct EncodeOptions {
  int max_len = kGradingMaxLen;
  bool edited_first = false;  // segment order defaults to (original, edited)
};

inline EncodedPair encode_record(const EncoderBackend& backend, const HeadlineRecord& record,
                                 const EncodeOptions& opts = {}) {
  CharSpan kept{}, replaced{};
  const std::string original = strip_edit(record.original_marked, &kept);
  const std::string edited = apply_edit_spanned(record.original_marked, record.edit_word, &replaced);

  EncodedPair out;
  out.record_id = record.id;
  out.edited_segment = opts.edited_first ? 0 : 1;
  const std::string& text_a = opts.edited_first ? edited : original;
  const std::string& text_b = opts.edited_first ? original : edited;
  out.enc = backend.tokenize(text_a, text_b, opts.max_len);

  const int original_segment = 1 - out.edited_segment;
  for (size_t i = 0; i < out.enc.input.ids.size(); ++i) {
    if (out.enc.special[i]) continue;
    const CharSpan& span = out.enc.spans[i];
    if (!span.valid()) continue;
    if (out.enc.input.segments[i] == out.edited_segment &&
        span.overlaps(replaced.begin, replaced.end)) {
      out.edited_token_positions.push_back(static_cast<int>(i));
    }
    if (out.enc.input.segments[i] == original_segment && span.overlaps(kept.begin, kept.end)) {
      out.original_token_positions.push_back(static_cast<int>(i));
    }
  }
  out.edit_dropped = out.edited_token_positions.empty();
  return out;
}

// Variant that enforces the edited tokens survived truncation.
inline EncodedPair encode_record_strict(const EncoderBackend& backend,
                                        const HeadlineRecord& record,
                                        const EncodeOptions& opts = {}) {
  EncodedPair out = encode_record(backend, record, opts);
  if (out.edit_dropped) {
    throw Error(Err::TruncationDroppedEdit,
                "record " + record.id + ": no token of the replacement word survived encoding");
  }
  return out;
}

// Single-sentence layout (CLS tokens SEP) used for MLM fine-tuning input.
inline PairEncoding encode_single(const EncoderBackend& backend, const std::string& text,
                                  int max_len) {
  return backend.tokenize(text, std::nullopt, max_len);
}

}  // namespace hgrade
