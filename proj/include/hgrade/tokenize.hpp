#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hgrade/errors.hpp"
#include "hgrade/text.hpp"

namespace hgrade {

enum class TokenizerKind { whitespace, wordpiece, byte_bpe, unigram };

inline const char* tokenizer_kind_str(TokenizerKind k) {
  switch (k) {
    case TokenizerKind::whitespace: return "whitespace";
    case TokenizerKind::wordpiece: return "wordpiece";
    case TokenizerKind::byte_bpe: return "byte_bpe";
    case TokenizerKind::unigram: return "unigram";
  }
  return "?";
}

inline TokenizerKind tokenizer_kind_from_str(const std::string& s) {
  if (s == "whitespace") return TokenizerKind::whitespace;
  if (s == "wordpiece") return TokenizerKind::wordpiece;
  if (s == "byte_bpe") return TokenizerKind::byte_bpe;
  if (s == "unigram") return TokenizerKind::unigram;
  throw Error(Err::ConfigInvalid, "unknown tokenizer kind '" + s + "'");
}

// A subword token with its byte span into the source text.
struct SubToken {
  int id = 0;
  CharSpan span;
};

// Tokenizes raw text into subword ids with byte spans. Implementations are
// immutable after construction and safe to share across threads.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual TokenizerKind kind() const = 0;
  virtual int vocab_size() const = 0;
  virtual std::vector<SubToken> tokenize(std::string_view text) const = 0;
  virtual std::string id_to_token(int id) const = 0;

  // Human-readable surface form reassembled from token ids (casing and
  // whitespace normalized by the tokenizer's own rules).
  virtual std::string detokenize(const std::vector<int>& ids) const = 0;

  // Hash of the vocabulary content, recorded in checkpoint manifests.
  virtual uint64_t vocab_hash() const = 0;

  // Writes the tokenizer's asset files into a checkpoint directory.
  virtual void save_assets(const std::string& dir) const = 0;
};

// ---------------------------------------------------------------------------
// Plain vocabulary (one token per line; line number = id). Serves the
// whitespace and wordpiece tokenizers.

class Vocab {
 public:
  Vocab() = default;

  explicit Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    for (size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = static_cast<int>(i);
  }

  static Vocab from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Err::InputMissing, "cannot open vocab file " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(line);
    }
    while (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    return Vocab(std::move(tokens));
  }

  int lookup(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? -1 : it->second;
  }

  const std::string& token(int id) const { return tokens_.at(static_cast<size_t>(id)); }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  uint64_t content_hash() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens_) {
      h = fnv1a64(t, h);
      h = fnv1a64("\n", h);
    }
    return h;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Err::IoError, "cannot write vocab file " + path);
    for (const auto& t : tokens_) out << t << '\n';
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Special token names shared by the whitespace tokenizer and tiny backend.
inline constexpr const char* kPadToken = "[PAD]";
inline constexpr const char* kUnkToken = "[UNK]";
inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kMaskToken = "[MASK]";

// Builds a whitespace-word vocabulary from a training corpus: specials first,
// then words with frequency >= min_freq in first-seen order.
inline Vocab build_whitespace_vocab(const std::vector<std::string>& texts, int min_freq = 2) {
  std::vector<std::string> order;
  std::unordered_map<std::string, int> freq;
  for (const auto& text : texts) {
    const std::string lowered = ascii_lower(text);
    for (const CharSpan& w : split_words(lowered)) {
      std::string word = lowered.substr(static_cast<size_t>(w.begin),
                                        static_cast<size_t>(w.end - w.begin));
      if (++freq[word] == 1) order.push_back(std::move(word));
    }
  }
  std::vector<std::string> tokens{kPadToken, kUnkToken, kClsToken, kSepToken, kMaskToken};
  for (const auto& word : order) {
    if (freq[word] >= min_freq) tokens.push_back(word);
  }
  return Vocab(std::move(tokens));
}

// ---------------------------------------------------------------------------
// Whitespace tokenizer (tiny backend): lowercase, split on whitespace,
// out-of-vocabulary words map to [UNK].

class WhitespaceTokenizer : public Tokenizer {
 public:
  explicit WhitespaceTokenizer(Vocab vocab) : vocab_(std::move(vocab)) {
    unk_ = vocab_.lookup(kUnkToken);
    if (unk_ < 0) throw Error(Err::ConfigInvalid, "whitespace vocab lacks " + std::string(kUnkToken));
  }

  TokenizerKind kind() const override { return TokenizerKind::whitespace; }
  int vocab_size() const override { return vocab_.size(); }
  const Vocab& vocab() const { return vocab_; }

  std::vector<SubToken> tokenize(std::string_view text) const override {
    std::vector<SubToken> out;
    for (const CharSpan& w : split_words(text)) {
      const std::string word = ascii_lower(
          text.substr(static_cast<size_t>(w.begin), static_cast<size_t>(w.end - w.begin)));
      const int id = vocab_.lookup(word);
      out.push_back({id < 0 ? unk_ : id, w});
    }
    return out;
  }

  std::string id_to_token(int id) const override { return vocab_.token(id); }

  std::string detokenize(const std::vector<int>& ids) const override {
    std::string out;
    for (int id : ids) {
      if (!out.empty()) out += ' ';
      out += vocab_.token(id);
    }
    return out;
  }

  uint64_t vocab_hash() const override { return vocab_.content_hash(); }

  void save_assets(const std::string& dir) const override { vocab_.save(dir + "/vocab.txt"); }

 private:
  Vocab vocab_;
  int unk_;
};

// ---------------------------------------------------------------------------
// WordPiece tokenizer (BERT / DistilBERT style): basic tokenization splits on
// whitespace and punctuation (optionally lowercasing), then greedy
// longest-match subword segmentation with "##" continuation pieces.

class WordPieceTokenizer : public Tokenizer {
 public:
  WordPieceTokenizer(Vocab vocab, bool lowercase, std::string unk_token = kUnkToken)
      : vocab_(std::move(vocab)), lowercase_(lowercase), unk_token_(std::move(unk_token)) {
    unk_ = vocab_.lookup(unk_token_);
    if (unk_ < 0) throw Error(Err::ConfigInvalid, "wordpiece vocab lacks " + unk_token_);
  }

  TokenizerKind kind() const override { return TokenizerKind::wordpiece; }
  int vocab_size() const override { return vocab_.size(); }
  const Vocab& vocab() const { return vocab_; }

  std::vector<SubToken> tokenize(std::string_view text) const override {
    std::vector<SubToken> out;
    for (const CharSpan& w : basic_tokens(text)) {
      segment_word(text, w, out);
    }
    return out;
  }

  std::string id_to_token(int id) const override { return vocab_.token(id); }

  std::string detokenize(const std::vector<int>& ids) const override {
    std::string out;
    for (int id : ids) {
      const std::string& t = vocab_.token(id);
      if (t.size() > 2 && t[0] == '#' && t[1] == '#') {
        out += t.substr(2);
      } else {
        if (!out.empty()) out += ' ';
        out += t;
      }
    }
    return out;
  }

  uint64_t vocab_hash() const override { return vocab_.content_hash(); }

  void save_assets(const std::string& dir) const override { vocab_.save(dir + "/vocab.txt"); }

 private:
  static constexpr size_t kMaxWordBytes = 100;

  // Whitespace words further split at ASCII punctuation; each punctuation
  // byte becomes its own basic token.
  static std::vector<CharSpan> basic_tokens(std::string_view text) {
    std::vector<CharSpan> out;
    for (const CharSpan& w : split_words(text)) {
      int start = w.begin;
      for (int i = w.begin; i < w.end; ++i) {
        if (is_ascii_punct(text[static_cast<size_t>(i)])) {
          if (i > start) out.push_back({start, i});
          out.push_back({i, i + 1});
          start = i + 1;
        }
      }
      if (start < w.end) out.push_back({start, w.end});
    }
    return out;
  }

  void segment_word(std::string_view text, const CharSpan& w, std::vector<SubToken>& out) const {
    std::string word(text.substr(static_cast<size_t>(w.begin),
                                 static_cast<size_t>(w.end - w.begin)));
    if (lowercase_) word = ascii_lower(word);
    if (word.size() > kMaxWordBytes) {
      out.push_back({unk_, w});
      return;
    }
    std::vector<SubToken> pieces;
    size_t pos = 0;
    while (pos < word.size()) {
      size_t len = word.size() - pos;
      int id = -1;
      while (len > 0) {
        std::string candidate = (pos == 0 ? "" : "##") + word.substr(pos, len);
        id = vocab_.lookup(candidate);
        if (id >= 0) break;
        --len;
      }
      if (id < 0) {
        out.push_back({unk_, w});  // whole word becomes UNK
        return;
      }
      pieces.push_back({id, {w.begin + static_cast<int>(pos), w.begin + static_cast<int>(pos + len)}});
      pos += len;
    }
    out.insert(out.end(), pieces.begin(), pieces.end());
  }

  Vocab vocab_;
  bool lowercase_;
  std::string unk_token_;
  int unk_;
};

// ---------------------------------------------------------------------------
// Byte-level BPE (RoBERTa / GPT-2 style): bytes are mapped to printable
// unicode symbols, pre-tokenized chunks keep their leading space, and merges
// are applied lowest-rank first. Assets: vocab.json + merges.txt.

class ByteBpeTokenizer : public Tokenizer {
 public:
  ByteBpeTokenizer(const std::string& vocab_json_path, const std::string& merges_path) {
    load_vocab(vocab_json_path);
    load_merges(merges_path);
    init_byte_table();
    compute_hash();
  }

  TokenizerKind kind() const override { return TokenizerKind::byte_bpe; }
  int vocab_size() const override { return static_cast<int>(id_to_token_.size()); }

  std::vector<SubToken> tokenize(std::string_view text) const override {
    std::vector<SubToken> out;
    for (const Chunk& chunk : pretokenize(text)) {
      encode_chunk(text, chunk, out);
    }
    return out;
  }

  std::string id_to_token(int id) const override {
    return id_to_token_.at(static_cast<size_t>(id));
  }

  std::string detokenize(const std::vector<int>& ids) const override {
    std::string bytes;
    for (int id : ids) {
      const std::string& sym = id_to_token_.at(static_cast<size_t>(id));
      size_t i = 0;
      while (i < sym.size()) {
        const size_t n = utf8_len(sym[i]);
        auto it = unicode_to_byte_.find(sym.substr(i, n));
        if (it != unicode_to_byte_.end()) bytes.push_back(static_cast<char>(it->second));
        i += n;
      }
    }
    return std::string(trim(bytes));
  }

  uint64_t vocab_hash() const override { return vocab_hash_; }

  void save_assets(const std::string& dir) const override {
    {
      nlohmann::json j;
      for (size_t i = 0; i < id_to_token_.size(); ++i) j[id_to_token_[i]] = i;
      std::ofstream out(dir + "/vocab.json", std::ios::binary);
      if (!out) throw Error(Err::IoError, "cannot write vocab.json under " + dir);
      out << j.dump();
    }
    {
      std::ofstream out(dir + "/merges.txt", std::ios::binary);
      if (!out) throw Error(Err::IoError, "cannot write merges.txt under " + dir);
      for (const auto& m : merge_list_) out << m.first << ' ' << m.second << '\n';
    }
  }

 private:
  struct Chunk {
    int begin;  // byte offset in text, includes an attached leading space
    int end;
  };

  static size_t utf8_len(char lead) {
    const auto u = static_cast<unsigned char>(lead);
    if (u < 0x80) return 1;
    if ((u >> 5) == 0x6) return 2;
    if ((u >> 4) == 0xe) return 3;
    return 4;
  }

  // Content hash over structure rather than file bytes, so saving the assets
  // and reloading them (possibly with different JSON formatting) is stable.
  void compute_hash() {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : id_to_token_) {
      h = fnv1a64(t, h);
      h = fnv1a64("\n", h);
    }
    for (const auto& m : merge_list_) {
      h = fnv1a64(m.first, h);
      h = fnv1a64(" ", h);
      h = fnv1a64(m.second, h);
      h = fnv1a64("\n", h);
    }
    vocab_hash_ = h;
  }

  void load_vocab(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Err::InputMissing, "cannot open BPE vocab " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();
    nlohmann::json j = nlohmann::json::parse(content);
    size_t max_id = 0;
    for (auto it = j.begin(); it != j.end(); ++it) {
      max_id = std::max(max_id, static_cast<size_t>(it.value().get<int>()));
    }
    id_to_token_.assign(max_id + 1, std::string());
    for (auto it = j.begin(); it != j.end(); ++it) {
      const int id = it.value().get<int>();
      id_to_token_[static_cast<size_t>(id)] = it.key();
      token_to_id_[it.key()] = id;
    }
  }

  void load_merges(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Err::InputMissing, "cannot open BPE merges " + path);
    std::string line;
    int rank = 0;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const size_t sp = line.find(' ');
      if (sp == std::string::npos) continue;
      const std::string a = line.substr(0, sp);
      const std::string b = line.substr(sp + 1);
      merge_rank_[a + "\x01" + b] = rank++;
      merge_list_.emplace_back(a, b);
    }
  }

  void init_byte_table() {
    // GPT-2 byte-to-unicode table: printable bytes map to themselves, the
    // rest are shifted into the U+0100 range.
    int n = 0;
    for (int b = 0; b < 256; ++b) {
      const bool printable = (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE);
      int cp;
      if (printable) {
        cp = b;
      } else {
        cp = 256 + n;
        ++n;
      }
      std::string sym = codepoint_to_utf8(cp);
      byte_to_unicode_[b] = sym;
      unicode_to_byte_[sym] = b;
    }
  }

  static std::string codepoint_to_utf8(int cp) {
    std::string out;
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
  }

  // Chunks are letter runs, digit runs, or punctuation runs, each absorbing
  // one preceding space.
  static std::vector<Chunk> pretokenize(std::string_view text) {
    auto klass = [](char c) -> int {
      const auto u = static_cast<unsigned char>(c);
      if (is_ascii_space(c)) return 0;
      if (std::isalpha(u) || u >= 0x80) return 1;  // non-ASCII treated as letters
      if (std::isdigit(u)) return 2;
      return 3;
    };
    std::vector<Chunk> chunks;
    size_t i = 0;
    while (i < text.size()) {
      if (is_ascii_space(text[i])) {
        // a single space attaches to the following chunk
        if (text[i] == ' ' && i + 1 < text.size() && !is_ascii_space(text[i + 1])) {
          size_t j = i + 1;
          const int k = klass(text[j]);
          while (j < text.size() && klass(text[j]) == k) ++j;
          chunks.push_back({static_cast<int>(i), static_cast<int>(j)});
          i = j;
        } else {
          size_t j = i;
          while (j < text.size() && is_ascii_space(text[j])) ++j;
          chunks.push_back({static_cast<int>(i), static_cast<int>(j)});
          i = j;
        }
      } else {
        size_t j = i;
        const int k = klass(text[j]);
        while (j < text.size() && klass(text[j]) == k) ++j;
        chunks.push_back({static_cast<int>(i), static_cast<int>(j)});
        i = j;
      }
    }
    return chunks;
  }

  struct Symbol {
    std::string sym;
    int nbytes;  // source bytes covered
  };

  void encode_chunk(std::string_view text, const Chunk& chunk, std::vector<SubToken>& out) const {
    std::vector<Symbol> symbols;
    for (int i = chunk.begin; i < chunk.end; ++i) {
      const auto b = static_cast<unsigned char>(text[static_cast<size_t>(i)]);
      symbols.push_back({byte_to_unicode_.at(b), 1});
    }
    // Iteratively apply the lowest-rank adjacent merge.
    while (symbols.size() > 1) {
      int best_rank = std::numeric_limits<int>::max();
      size_t best_i = 0;
      for (size_t i = 0; i + 1 < symbols.size(); ++i) {
        auto it = merge_rank_.find(symbols[i].sym + "\x01" + symbols[i + 1].sym);
        if (it != merge_rank_.end() && it->second < best_rank) {
          best_rank = it->second;
          best_i = i;
        }
      }
      if (best_rank == std::numeric_limits<int>::max()) break;
      symbols[best_i].sym += symbols[best_i + 1].sym;
      symbols[best_i].nbytes += symbols[best_i + 1].nbytes;
      symbols.erase(symbols.begin() + static_cast<long>(best_i) + 1);
    }
    int pos = chunk.begin;
    for (const Symbol& s : symbols) {
      auto it = token_to_id_.find(s.sym);
      if (it != token_to_id_.end()) {
        out.push_back({it->second, {pos, pos + s.nbytes}});
      }
      // Symbols missing from the vocab are dropped; a complete byte-level
      // vocab contains all 256 base symbols, so this only happens with
      // truncated synthetic vocabs.
      pos += s.nbytes;
    }
  }

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
  std::unordered_map<std::string, int> merge_rank_;
  std::vector<std::pair<std::string, std::string>> merge_list_;
  std::unordered_map<int, std::string> byte_to_unicode_;
  std::unordered_map<std::string, int> unicode_to_byte_;
  uint64_t vocab_hash_ = 0;
};

// ---------------------------------------------------------------------------
// Unigram tokenizer (ALBERT / SentencePiece style): pieces with log
// probabilities from a TSV export ("piece<TAB>score", line number = id),
// Viterbi segmentation over the normalized text. Spaces normalize to the
// U+2581 marker glued to the following piece.

class UnigramTokenizer : public Tokenizer {
 public:
  UnigramTokenizer(const std::string& vocab_tsv_path, bool lowercase,
                   std::string unk_piece = "<unk>")
      : lowercase_(lowercase), unk_piece_(std::move(unk_piece)) {
    std::ifstream in(vocab_tsv_path, std::ios::binary);
    if (!in) throw Error(Err::InputMissing, "cannot open unigram vocab " + vocab_tsv_path);
    std::string line;
    // Hash over the canonical "piece\t%g" form (the same format save_assets
    // writes), so a save/reload cycle keeps the hash stable even when the
    // source file formats scores differently.
    vocab_hash_ = 0xcbf29ce484222325ULL;
    char buf[64];
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const size_t tab = line.find('\t');
      const std::string piece = tab == std::string::npos ? line : line.substr(0, tab);
      const double score =
          tab == std::string::npos ? 0.0 : std::strtod(line.c_str() + tab + 1, nullptr);
      std::snprintf(buf, sizeof(buf), "%g", score);
      vocab_hash_ = fnv1a64(piece, vocab_hash_);
      vocab_hash_ = fnv1a64("\t", vocab_hash_);
      vocab_hash_ = fnv1a64(buf, vocab_hash_);
      vocab_hash_ = fnv1a64("\n", vocab_hash_);
      pieces_.push_back(piece);
      scores_.push_back(score);
      piece_ids_[piece] = static_cast<int>(pieces_.size()) - 1;
      max_piece_len_ = std::max(max_piece_len_, piece.size());
    }
    auto it = piece_ids_.find(unk_piece_);
    unk_ = it == piece_ids_.end() ? -1 : it->second;
  }

  TokenizerKind kind() const override { return TokenizerKind::unigram; }
  int vocab_size() const override { return static_cast<int>(pieces_.size()); }

  std::vector<SubToken> tokenize(std::string_view text) const override {
    // Normalize: lowercase (ASCII), collapse each space run to one marker,
    // prepend a marker. norm2orig maps every normalized byte back to the
    // source byte it came from; norm2end maps to one-past its source byte.
    std::string norm;
    std::vector<int> norm2orig, norm2end;
    auto push_marker = [&](int orig_begin, int orig_end) {
      for (char c : std::string_view(kSpaceMarker)) {
        norm.push_back(c);
        norm2orig.push_back(orig_begin);
        norm2end.push_back(orig_end);
      }
    };
    bool at_start = true;
    size_t i = 0;
    while (i < text.size()) {
      if (is_ascii_space(text[i])) {
        size_t j = i;
        while (j < text.size() && is_ascii_space(text[j])) ++j;
        if (j < text.size()) push_marker(static_cast<int>(i), static_cast<int>(j));
        i = j;
        at_start = false;
        continue;
      }
      if (at_start) {
        push_marker(static_cast<int>(i), static_cast<int>(i));
        at_start = false;
      }
      norm.push_back(lowercase_ ? ascii_lower_char(text[i]) : text[i]);
      norm2orig.push_back(static_cast<int>(i));
      norm2end.push_back(static_cast<int>(i) + 1);
      ++i;
    }

    const size_t n = norm.size();
    if (n == 0) return {};

    // Viterbi: best[i] = max total score of a segmentation of norm[0, i).
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    const double unk_penalty = min_score_() - 10.0;
    std::vector<double> best(n + 1, kNegInf);
    std::vector<int> back(n + 1, -1), back_id(n + 1, -1);
    best[0] = 0.0;
    for (size_t end = 1; end <= n; ++end) {
      const size_t max_len = std::min(end, max_piece_len_);
      for (size_t len = 1; len <= max_len; ++len) {
        const size_t start = end - len;
        if (best[start] == kNegInf) continue;
        auto it = piece_ids_.find(norm.substr(start, len));
        if (it == piece_ids_.end()) continue;
        const double s = best[start] + scores_[static_cast<size_t>(it->second)];
        if (s > best[end]) {
          best[end] = s;
          back[end] = static_cast<int>(start);
          back_id[end] = it->second;
        }
      }
      // Unknown fallback: consume one byte (whole UTF-8 char would be nicer,
      // but byte granularity keeps spans exact and headlines are ASCII-heavy).
      if (best[end] == kNegInf && best[end - 1] != kNegInf) {
        best[end] = best[end - 1] + unk_penalty;
        back[end] = static_cast<int>(end - 1);
        back_id[end] = unk_;
      }
    }

    std::vector<SubToken> rev;
    size_t pos = n;
    while (pos > 0) {
      const int start = back[pos];
      if (start < 0) return {};  // unreachable with the fallback in place
      const int id = back_id[pos];
      if (id >= 0) {
        rev.push_back({id, {norm2orig[static_cast<size_t>(start)],
                            norm2end[pos - 1]}});
      }
      pos = static_cast<size_t>(start);
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
  }

  std::string id_to_token(int id) const override { return pieces_.at(static_cast<size_t>(id)); }

  std::string detokenize(const std::vector<int>& ids) const override {
    std::string out;
    for (int id : ids) {
      std::string piece = pieces_.at(static_cast<size_t>(id));
      size_t from = 0;
      while ((from = piece.find(kSpaceMarker, from)) != std::string::npos) {
        piece.replace(from, 3, " ");
        from += 1;
      }
      out += piece;
    }
    return std::string(trim(out));
  }

  uint64_t vocab_hash() const override { return vocab_hash_; }

  void save_assets(const std::string& dir) const override {
    std::ofstream out(dir + "/spm.vocab", std::ios::binary);
    if (!out) throw Error(Err::IoError, "cannot write spm.vocab under " + dir);
    char buf[64];
    for (size_t i = 0; i < pieces_.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%g", scores_[i]);
      out << pieces_[i] << '\t' << buf << '\n';
    }
  }

 private:
  static constexpr const char* kSpaceMarker = "\xE2\x96\x81";  // U+2581

  double min_score_() const {
    double m = 0.0;
    for (double s : scores_) m = std::min(m, s);
    return m;
  }

  std::vector<std::string> pieces_;
  std::vector<double> scores_;
  std::unordered_map<std::string, int> piece_ids_;
  size_t max_piece_len_ = 0;
  bool lowercase_;
  std::string unk_piece_;
  int unk_;
  uint64_t vocab_hash_ = 0;
};

}  // namespace hgrade
