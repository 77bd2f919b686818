#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hgrade/nn.hpp"
#include "hgrade/text.hpp"
#include "hgrade/tokenize.hpp"

namespace hgrade {

enum class Family {
  bert_base_uncased,
  roberta_base,
  albert_base_v2,
  distilbert_base_uncased,
  tiny,
};

inline const char* family_str(Family f) {
  switch (f) {
    case Family::bert_base_uncased: return "bert_base_uncased";
    case Family::roberta_base: return "roberta_base";
    case Family::albert_base_v2: return "albert_base_v2";
    case Family::distilbert_base_uncased: return "distilbert_base_uncased";
    case Family::tiny: return "tiny";
  }
  return "?";
}

inline Family family_from_str(const std::string& s) {
  for (Family f : {Family::bert_base_uncased, Family::roberta_base, Family::albert_base_v2,
                   Family::distilbert_base_uncased, Family::tiny}) {
    if (s == family_str(f)) return f;
  }
  throw Error(Err::ConfigInvalid, "unknown model family '" + s + "'");
}

enum class WeightSource { published_pretrained, lm_finetuned_checkpoint, random_init };

inline const char* weight_source_str(WeightSource w) {
  switch (w) {
    case WeightSource::published_pretrained: return "published_pretrained";
    case WeightSource::lm_finetuned_checkpoint: return "lm_finetuned_checkpoint";
    case WeightSource::random_init: return "random_init";
  }
  return "?";
}

inline WeightSource weight_source_from_str(const std::string& s) {
  for (WeightSource w : {WeightSource::published_pretrained, WeightSource::lm_finetuned_checkpoint,
                         WeightSource::random_init}) {
    if (s == weight_source_str(w)) return w;
  }
  throw Error(Err::ConfigInvalid, "unknown weight source '" + s + "'");
}

struct SpecialTokenIds {
  int cls = -1;
  int sep = -1;
  int pad = -1;
  int mask = -1;
  int unk = -1;
};

struct BackendSpec {
  Family family = Family::tiny;
  int num_layers = 2;
  int num_heads = 4;
  int hidden_size = 64;
  int intermediate_size = 256;
  int embedding_size = 64;  // != hidden_size means a factorized embedding projection
  int max_positions = 128;
  int vocab_size = 0;  // tiny: filled from the corpus vocabulary
  SpecialTokenIds specials;
  bool use_segments = true;
  bool has_pooler = true;
  bool shared_layers = false;  // ALBERT-style cross-layer parameter sharing
  bool lowercase = true;
  TokenizerKind tokenizer = TokenizerKind::whitespace;

  void validate() const {
    if (num_heads <= 0 || hidden_size % num_heads != 0) {
      throw Error(Err::ConfigInvalid, "num_heads must divide hidden_size");
    }
    if (family == Family::tiny) {
      if (num_layers < 1) throw Error(Err::ConfigInvalid, "tiny backend needs >= 1 layer");
      if (num_heads < 2) {
        throw Error(Err::ConfigInvalid, "tiny backend needs >= 2 heads for attention analysis");
      }
    }
    if (max_positions < 4) throw Error(Err::ConfigInvalid, "max_positions too small");
  }
};

// Public configuration of each supported family.
inline BackendSpec family_defaults(Family f) {
  BackendSpec s;
  s.family = f;
  switch (f) {
    case Family::bert_base_uncased:
      s.num_layers = 12; s.num_heads = 12; s.hidden_size = 768; s.intermediate_size = 3072;
      s.embedding_size = 768; s.max_positions = 512; s.vocab_size = 30522;
      s.specials = {101, 102, 0, 103, 100};
      s.use_segments = true; s.has_pooler = true; s.shared_layers = false; s.lowercase = true;
      s.tokenizer = TokenizerKind::wordpiece;
      break;
    case Family::roberta_base:
      s.num_layers = 12; s.num_heads = 12; s.hidden_size = 768; s.intermediate_size = 3072;
      s.embedding_size = 768; s.max_positions = 512; s.vocab_size = 50265;
      s.specials = {0, 2, 1, 50264, 3};
      s.use_segments = false; s.has_pooler = true; s.shared_layers = false; s.lowercase = false;
      s.tokenizer = TokenizerKind::byte_bpe;
      break;
    case Family::albert_base_v2:
      s.num_layers = 12; s.num_heads = 12; s.hidden_size = 768; s.intermediate_size = 3072;
      s.embedding_size = 128; s.max_positions = 512; s.vocab_size = 30000;
      s.specials = {2, 3, 0, 4, 1};
      s.use_segments = true; s.has_pooler = true; s.shared_layers = true; s.lowercase = true;
      s.tokenizer = TokenizerKind::unigram;
      break;
    case Family::distilbert_base_uncased:
      s.num_layers = 6; s.num_heads = 12; s.hidden_size = 768; s.intermediate_size = 3072;
      s.embedding_size = 768; s.max_positions = 512; s.vocab_size = 30522;
      s.specials = {101, 102, 0, 103, 100};
      s.use_segments = false; s.has_pooler = false; s.shared_layers = false; s.lowercase = true;
      s.tokenizer = TokenizerKind::wordpiece;
      break;
    case Family::tiny:
      s.num_layers = 2; s.num_heads = 4; s.hidden_size = 64; s.intermediate_size = 256;
      s.embedding_size = 64; s.max_positions = 128; s.vocab_size = 0;
      s.specials = {2, 3, 0, 4, 1};  // [PAD] [UNK] [CLS] [SEP] [MASK] order in the vocab
      s.use_segments = true; s.has_pooler = true; s.shared_layers = false; s.lowercase = true;
      s.tokenizer = TokenizerKind::whitespace;
      break;
  }
  return s;
}

// Maximum sequence lengths: short for grading inputs, longer for MLM
// fine-tuning (clipped to the backend's position table).
inline constexpr int kGradingMaxLen = 128;
inline constexpr int kMlmMaxLen = 256;

// ---------------------------------------------------------------------------
// Tokenized model input

struct TokenizedInput {
  std::vector<int> ids;
  std::vector<int> segments;
  std::vector<uint8_t> attention_mask;  // 1 = real token, 0 = padding

  size_t size() const { return ids.size(); }
};

// Two-sentence layout: CLS, tokens_a, SEP, [tokens_b, SEP], with byte-span
// alignment for every non-special token.
struct PairEncoding {
  TokenizedInput input;
  std::vector<uint8_t> special;  // 1 = CLS/SEP
  std::vector<CharSpan> spans;   // span into the owning segment's text
  size_t dropped_a = 0;          // tokens truncated from each segment's tail
  size_t dropped_b = 0;

  std::vector<int> segment_token_indices(int segment) const {
    std::vector<int> out;
    for (size_t i = 0; i < input.ids.size(); ++i) {
      if (!special[i] && input.segments[i] == segment) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  std::vector<int> non_special_indices() const {
    std::vector<int> out;
    for (size_t i = 0; i < input.ids.size(); ++i) {
      if (!special[i] && input.attention_mask[i]) out.push_back(static_cast<int>(i));
    }
    return out;
  }
};

// Assembles the pair layout with truncation from the tail of each segment
// (the longer segment is trimmed first; special tokens are never dropped).
inline PairEncoding build_pair_encoding(const Tokenizer& tok, const SpecialTokenIds& specials,
                                        std::string_view text_a,
                                        std::optional<std::string_view> text_b, int max_len) {
  std::vector<SubToken> a = tok.tokenize(text_a);
  std::vector<SubToken> b = text_b ? tok.tokenize(*text_b) : std::vector<SubToken>{};
  const size_t num_special = text_b ? 3 : 2;
  if (max_len < static_cast<int>(num_special) + 1) {
    throw Error(Err::ConfigInvalid, "max_len leaves no room for content tokens");
  }
  const size_t budget = static_cast<size_t>(max_len) - num_special;
  PairEncoding enc;
  while (a.size() + b.size() > budget) {
    if (a.size() >= b.size() && !a.empty()) {
      a.pop_back();
      ++enc.dropped_a;
    } else {
      b.pop_back();
      ++enc.dropped_b;
    }
  }

  auto push = [&](int id, int segment, CharSpan span, bool is_special) {
    enc.input.ids.push_back(id);
    enc.input.segments.push_back(segment);
    enc.input.attention_mask.push_back(1);
    enc.special.push_back(is_special ? 1 : 0);
    enc.spans.push_back(span);
  };
  push(specials.cls, 0, {}, true);
  for (const SubToken& t : a) push(t.id, 0, t.span, false);
  push(specials.sep, 0, {}, true);
  if (text_b) {
    for (const SubToken& t : b) push(t.id, 1, t.span, false);
    push(specials.sep, 1, {}, true);
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Encoder output

struct EncoderOutput {
  Vec pooled;
  Mat token_states;                         // seq_len x hidden
  std::vector<std::vector<Mat>> attentions;  // [layer][head] -> seq_len x seq_len
};

namespace detail {

struct LayerParams {
  Param *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
  Param *ln1_g, *ln1_b;
  Param *w1, *b1, *w2, *b2;
  Param *ln2_g, *ln2_b;
};

struct LayerCache {
  Mat in;
  Mat q, k, v;
  std::vector<Mat> attn;  // per head
  Mat ctx;
  LayerNormCache ln1;
  Mat x_mid;
  Mat ffn_pre;
  Mat ffn_act;
  LayerNormCache ln2;
  Mat out;
};

}  // namespace detail

// Cache of one forward pass, consumed by backward().
struct ForwardCache {
  TokenizedInput input;
  LayerNormCache ln_emb;
  Mat emb_normed;  // seq x embedding_size
  Mat enc_in;      // seq x hidden (after the optional embedding projection)
  std::vector<detail::LayerCache> layers;
  Mat final_states;
  Vec pooled;

  const Mat& attention(int layer, int head) const { return layers[static_cast<size_t>(layer)].attn[static_cast<size_t>(head)]; }
};

// Cache of the MLM head evaluated at selected positions.
struct MlmCache {
  std::vector<int> positions;
  Mat x_sel;    // P x hidden
  Mat t_pre;    // P x embedding_size
  Mat t_act;
  LayerNormCache ln;
  Mat hidden;   // P x embedding_size
  Mat logits;   // P x vocab
};

// ---------------------------------------------------------------------------
// Bidirectional transformer encoder with a masked-word-prediction head.
// One parameterized architecture serves every family; the tiny family is the
// self-contained desk-scale instance.

class EncoderBackend {
 public:
  EncoderBackend(BackendSpec spec, std::shared_ptr<const Tokenizer> tokenizer,
                 WeightSource provenance, uint64_t init_seed = 1)
      : spec_(spec), tokenizer_(std::move(tokenizer)), provenance_(provenance) {
    if (spec_.vocab_size == 0) spec_.vocab_size = tokenizer_->vocab_size();
    spec_.validate();
    build_params();
    init_weights(init_seed);
  }

  const BackendSpec& spec() const { return spec_; }
  WeightSource provenance() const { return provenance_; }
  void set_provenance(WeightSource w) { provenance_ = w; }
  const Tokenizer& tokenizer() const { return *tokenizer_; }
  std::shared_ptr<const Tokenizer> tokenizer_ptr() const { return tokenizer_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // --- tokenize -----------------------------------------------------------

  PairEncoding tokenize(std::string_view text_a, std::optional<std::string_view> text_b,
                        int max_len = 0) const {
    int limit = max_len > 0 ? max_len : kGradingMaxLen;
    limit = std::min(limit, spec_.max_positions);
    return build_pair_encoding(*tokenizer_, spec_.specials, text_a, text_b, limit);
  }

  // --- forward ------------------------------------------------------------

  ForwardCache forward(const TokenizedInput& input, bool want_attention = false) const {
    (void)want_attention;  // attention matrices are always cached
    const auto L = static_cast<Eigen::Index>(input.ids.size());
    if (L == 0) throw Error(Err::EmptyInput, "cannot encode an empty token sequence");
    if (L > spec_.max_positions) {
      throw Error(Err::ConfigInvalid, "sequence length " + std::to_string(L) +
                                          " exceeds max_positions " +
                                          std::to_string(spec_.max_positions));
    }
    ForwardCache cache;
    cache.input = input;

    const Mat& wword = word_emb_->w;
    Mat x0(L, spec_.embedding_size);
    for (Eigen::Index t = 0; t < L; ++t) {
      const int id = input.ids[static_cast<size_t>(t)];
      if (id < 0 || id >= spec_.vocab_size) {
        throw Error(Err::ConfigInvalid, "token id " + std::to_string(id) + " out of range");
      }
      x0.row(t) = wword.row(id) + pos_emb_->w.row(t);
      if (seg_emb_) x0.row(t) += seg_emb_->w.row(input.segments[static_cast<size_t>(t)]);
    }
    cache.emb_normed =
        layer_norm_forward(x0, emb_ln_g_->w.col(0), emb_ln_b_->w.col(0), &cache.ln_emb);
    cache.enc_in = emb_proj_w_
                       ? Mat((cache.emb_normed * emb_proj_w_->w).rowwise() +
                             emb_proj_b_->w.col(0).transpose())
                       : cache.emb_normed;

    const std::vector<uint8_t>& key_allowed = input.attention_mask;
    const int heads = spec_.num_heads;
    const int dh = spec_.hidden_size / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat x = cache.enc_in;
    cache.layers.resize(static_cast<size_t>(spec_.num_layers));
    for (int l = 0; l < spec_.num_layers; ++l) {
      const detail::LayerParams& p = layer(l);
      detail::LayerCache& lc = cache.layers[static_cast<size_t>(l)];
      lc.in = x;
      lc.q = (x * p.wq->w).rowwise() + p.bq->w.col(0).transpose();
      lc.k = (x * p.wk->w).rowwise() + p.bk->w.col(0).transpose();
      lc.v = (x * p.wv->w).rowwise() + p.bv->w.col(0).transpose();
      lc.ctx.resize(L, spec_.hidden_size);
      lc.attn.resize(static_cast<size_t>(heads));
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * dh, dh);
        const auto kh = lc.k.middleCols(h * dh, dh);
        const auto vh = lc.v.middleCols(h * dh, dh);
        Mat scores = qh * kh.transpose() * scale;
        lc.attn[static_cast<size_t>(h)] = masked_row_softmax(scores, key_allowed);
        lc.ctx.middleCols(h * dh, dh) = lc.attn[static_cast<size_t>(h)] * vh;
      }
      Mat attn_out = (lc.ctx * p.wo->w).rowwise() + p.bo->w.col(0).transpose();
      lc.x_mid = layer_norm_forward(lc.in + attn_out, p.ln1_g->w.col(0), p.ln1_b->w.col(0),
                                    &lc.ln1);
      lc.ffn_pre = (lc.x_mid * p.w1->w).rowwise() + p.b1->w.col(0).transpose();
      lc.ffn_act = gelu(lc.ffn_pre);
      Mat ffn_out = (lc.ffn_act * p.w2->w).rowwise() + p.b2->w.col(0).transpose();
      lc.out = layer_norm_forward(lc.x_mid + ffn_out, p.ln2_g->w.col(0), p.ln2_b->w.col(0),
                                  &lc.ln2);
      x = lc.out;
    }
    cache.final_states = x;
    if (spec_.has_pooler) {
      Vec u = pooler_w_->w.transpose() * x.row(0).transpose() + pooler_b_->w.col(0);
      cache.pooled = u.array().tanh();
    } else {
      cache.pooled = x.row(0).transpose();
    }
    return cache;
  }

  // Accumulates parameter gradients for a loss whose derivative with respect
  // to the pooled vector and/or the final token states is given.
  void backward(const ForwardCache& cache, const Vec* d_pooled, const Mat* d_states) {
    const auto L = static_cast<Eigen::Index>(cache.input.ids.size());
    Mat dx = Mat::Zero(L, spec_.hidden_size);
    if (d_states) dx = *d_states;
    if (d_pooled) {
      if (spec_.has_pooler) {
        const Vec du =
            d_pooled->cwiseProduct((1.0 - cache.pooled.array().square()).matrix());
        pooler_w_->g.noalias() += cache.final_states.row(0).transpose() * du.transpose();
        pooler_b_->g.col(0).noalias() += du;
        dx.row(0).noalias() += (pooler_w_->w * du).transpose();
      } else {
        dx.row(0).noalias() += d_pooled->transpose();
      }
    }

    const int heads = spec_.num_heads;
    const int dh = spec_.hidden_size / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    for (int l = spec_.num_layers - 1; l >= 0; --l) {
      const detail::LayerParams& p = layer(l);
      const detail::LayerCache& lc = cache.layers[static_cast<size_t>(l)];

      Vec g2 = p.ln2_g->g.col(0), b2v = p.ln2_b->g.col(0);
      Mat dr2 = layer_norm_backward(dx, lc.ln2, p.ln2_g->w.col(0), g2, b2v);
      p.ln2_g->g.col(0) = g2;
      p.ln2_b->g.col(0) = b2v;

      Mat dx_mid = dr2;
      const Mat& df2 = dr2;
      p.w2->g.noalias() += lc.ffn_act.transpose() * df2;
      p.b2->g.col(0).noalias() += df2.colwise().sum().transpose();
      Mat dg = df2 * p.w2->w.transpose();
      Mat df1 = gelu_backward(lc.ffn_pre, dg);
      p.w1->g.noalias() += lc.x_mid.transpose() * df1;
      p.b1->g.col(0).noalias() += df1.colwise().sum().transpose();
      dx_mid.noalias() += df1 * p.w1->w.transpose();

      Vec g1 = p.ln1_g->g.col(0), b1v = p.ln1_b->g.col(0);
      Mat dr1 = layer_norm_backward(dx_mid, lc.ln1, p.ln1_g->w.col(0), g1, b1v);
      p.ln1_g->g.col(0) = g1;
      p.ln1_b->g.col(0) = b1v;

      Mat din = dr1;
      const Mat& dattn_out = dr1;
      p.wo->g.noalias() += lc.ctx.transpose() * dattn_out;
      p.bo->g.col(0).noalias() += dattn_out.colwise().sum().transpose();
      Mat dctx = dattn_out * p.wo->w.transpose();

      Mat dq = Mat::Zero(L, spec_.hidden_size);
      Mat dk = Mat::Zero(L, spec_.hidden_size);
      Mat dv = Mat::Zero(L, spec_.hidden_size);
      for (int h = 0; h < heads; ++h) {
        const auto qh = lc.q.middleCols(h * dh, dh);
        const auto kh = lc.k.middleCols(h * dh, dh);
        const auto vh = lc.v.middleCols(h * dh, dh);
        const Mat& a = lc.attn[static_cast<size_t>(h)];
        const auto dch = dctx.middleCols(h * dh, dh);
        Mat da = dch * vh.transpose();
        dv.middleCols(h * dh, dh).noalias() += a.transpose() * dch;
        Mat ds = row_softmax_backward(a, da);
        dq.middleCols(h * dh, dh).noalias() += ds * kh * scale;
        dk.middleCols(h * dh, dh).noalias() += ds.transpose() * qh * scale;
      }
      p.wq->g.noalias() += lc.in.transpose() * dq;
      p.bq->g.col(0).noalias() += dq.colwise().sum().transpose();
      p.wk->g.noalias() += lc.in.transpose() * dk;
      p.bk->g.col(0).noalias() += dk.colwise().sum().transpose();
      p.wv->g.noalias() += lc.in.transpose() * dv;
      p.bv->g.col(0).noalias() += dv.colwise().sum().transpose();
      din.noalias() += dq * p.wq->w.transpose();
      din.noalias() += dk * p.wk->w.transpose();
      din.noalias() += dv * p.wv->w.transpose();
      dx = din;
    }

    Mat d_emb_normed;
    if (emb_proj_w_) {
      emb_proj_w_->g.noalias() += cache.emb_normed.transpose() * dx;
      emb_proj_b_->g.col(0).noalias() += dx.colwise().sum().transpose();
      d_emb_normed = dx * emb_proj_w_->w.transpose();
    } else {
      d_emb_normed = dx;
    }
    Vec ge = emb_ln_g_->g.col(0), be = emb_ln_b_->g.col(0);
    Mat dx0 = layer_norm_backward(d_emb_normed, cache.ln_emb, emb_ln_g_->w.col(0), ge, be);
    emb_ln_g_->g.col(0) = ge;
    emb_ln_b_->g.col(0) = be;
    for (Eigen::Index t = 0; t < L; ++t) {
      word_emb_->g.row(cache.input.ids[static_cast<size_t>(t)]) += dx0.row(t);
      pos_emb_->g.row(t) += dx0.row(t);
      if (seg_emb_) seg_emb_->g.row(cache.input.segments[static_cast<size_t>(t)]) += dx0.row(t);
    }
  }

  // --- inference ----------------------------------------------------------

  EncoderOutput encode_one(const TokenizedInput& input, bool want_attention = false) const {
    ForwardCache cache = forward(input, want_attention);
    EncoderOutput out;
    out.pooled = cache.pooled;
    out.token_states = cache.final_states;
    if (want_attention) {
      out.attentions.reserve(cache.layers.size());
      for (auto& lc : cache.layers) out.attentions.push_back(std::move(lc.attn));
    }
    return out;
  }

  std::vector<EncoderOutput> encode(const std::vector<TokenizedInput>& batch,
                                    bool want_attention = false) const {
    std::vector<EncoderOutput> out;
    out.reserve(batch.size());
    for (const auto& input : batch) out.push_back(encode_one(input, want_attention));
    return out;
  }

  // --- masked-word prediction head ----------------------------------------

  // Vocabulary scores (logits) at the given positions. The decoder is tied to
  // the word-embedding matrix.
  MlmCache mlm_head(const ForwardCache& cache, const std::vector<int>& positions) const {
    MlmCache mc;
    mc.positions = positions;
    const auto P = static_cast<Eigen::Index>(positions.size());
    mc.x_sel.resize(P, spec_.hidden_size);
    for (Eigen::Index i = 0; i < P; ++i) {
      const int pos = positions[static_cast<size_t>(i)];
      if (pos < 0 || pos >= cache.final_states.rows()) {
        throw Error(Err::ConfigInvalid, "masked position out of range");
      }
      mc.x_sel.row(i) = cache.final_states.row(pos);
    }
    mc.t_pre = (mc.x_sel * mlm_w_->w).rowwise() + mlm_b_->w.col(0).transpose();
    mc.t_act = gelu(mc.t_pre);
    mc.hidden = layer_norm_forward(mc.t_act, mlm_ln_g_->w.col(0), mlm_ln_b_->w.col(0), &mc.ln);
    mc.logits = (mc.hidden * word_emb_->w.transpose()).rowwise() +
                mlm_bias_->w.col(0).transpose();
    return mc;
  }

  // Per-position vocabulary score distributions at the masked positions.
  std::vector<Mat> mlm_scores(const std::vector<TokenizedInput>& batch,
                              const std::vector<std::vector<int>>& masked_positions) const {
    if (batch.size() != masked_positions.size()) {
      throw Error(Err::LengthMismatch, "batch and masked position lists differ in length");
    }
    std::vector<Mat> out;
    out.reserve(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
      ForwardCache cache = forward(batch[i]);
      out.push_back(mlm_head(cache, masked_positions[i]).logits);
    }
    return out;
  }

  // Backward through the MLM head given dlogits; returns the gradient with
  // respect to the final token states (to feed into backward()).
  Mat mlm_backward(const ForwardCache& cache, const MlmCache& mc, const Mat& dlogits) {
    mlm_bias_->g.col(0).noalias() += dlogits.colwise().sum().transpose();
    word_emb_->g.noalias() += dlogits.transpose() * mc.hidden;
    Mat dhidden = dlogits * word_emb_->w;
    Vec gm = mlm_ln_g_->g.col(0), bm = mlm_ln_b_->g.col(0);
    Mat dt_act = layer_norm_backward(dhidden, mc.ln, mlm_ln_g_->w.col(0), gm, bm);
    mlm_ln_g_->g.col(0) = gm;
    mlm_ln_b_->g.col(0) = bm;
    Mat dt_pre = gelu_backward(mc.t_pre, dt_act);
    mlm_w_->g.noalias() += mc.x_sel.transpose() * dt_pre;
    mlm_b_->g.col(0).noalias() += dt_pre.colwise().sum().transpose();
    Mat dx_sel = dt_pre * mlm_w_->w.transpose();
    Mat d_states = Mat::Zero(cache.final_states.rows(), spec_.hidden_size);
    for (size_t i = 0; i < mc.positions.size(); ++i) {
      d_states.row(mc.positions[i]) += dx_sel.row(static_cast<Eigen::Index>(i));
    }
    return d_states;
  }

  // --- checkpoints ----------------------------------------------------------

  void save_checkpoint(const std::string& dir,
                       const std::map<std::string, std::string>& extra_manifest = {}) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    tokenizer_->save_assets(dir);
    write_manifest(dir + "/manifest.txt", extra_manifest);
    write_weights(dir + "/weights.bin", params_);
  }

  static std::map<std::string, std::string> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Err::CheckpointMissing, "missing manifest " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const size_t colon = line.find(':');
      if (colon == std::string::npos) continue;
      std::string key = std::string(trim(line.substr(0, colon)));
      std::string value = std::string(trim(line.substr(colon + 1)));
      kv[key] = value;
    }
    return kv;
  }

  // load_weights=false builds the backend (spec + tokenizer + manifest) but
  // leaves the weights untouched, so a caller can register extra parameters
  // (e.g. a task head) before reading the weights file itself.
  static EncoderBackend load_checkpoint(const std::string& dir,
                                        std::map<std::string, std::string>* manifest_out = nullptr,
                                        bool load_weights = true) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) throw Error(Err::CheckpointMissing, "no checkpoint directory " + dir);
    auto kv = read_manifest(dir + "/manifest.txt");
    auto need = [&](const std::string& k) -> const std::string& {
      auto it = kv.find(k);
      if (it == kv.end()) throw Error(Err::CheckpointMissing, "manifest lacks key '" + k + "'");
      return it->second;
    };
    BackendSpec spec;
    spec.family = family_from_str(need("family"));
    spec.num_layers = std::stoi(need("num_layers"));
    spec.num_heads = std::stoi(need("num_heads"));
    spec.hidden_size = std::stoi(need("hidden_size"));
    spec.intermediate_size = std::stoi(need("intermediate_size"));
    spec.embedding_size = std::stoi(need("embedding_size"));
    spec.max_positions = std::stoi(need("max_positions"));
    spec.vocab_size = std::stoi(need("vocab_size"));
    spec.specials.cls = std::stoi(need("cls_id"));
    spec.specials.sep = std::stoi(need("sep_id"));
    spec.specials.pad = std::stoi(need("pad_id"));
    spec.specials.mask = std::stoi(need("mask_id"));
    spec.specials.unk = std::stoi(need("unk_id"));
    spec.use_segments = need("use_segments") == "1";
    spec.has_pooler = need("has_pooler") == "1";
    spec.shared_layers = need("shared_layers") == "1";
    spec.lowercase = need("lowercase") == "1";
    spec.tokenizer = tokenizer_kind_from_str(need("tokenizer"));

    std::shared_ptr<const Tokenizer> tok = load_tokenizer_assets(dir, spec);
    const std::string recorded_hash = need("vocab_hash");
    if (hex64(tok->vocab_hash()) != recorded_hash) {
      throw Error(Err::CheckpointMissing,
                  "vocabulary hash mismatch in " + dir + " (manifest " + recorded_hash +
                      ", assets " + hex64(tok->vocab_hash()) + ")");
    }
    EncoderBackend backend(spec, std::move(tok), weight_source_from_str(need("provenance")), 0);
    if (load_weights) read_weights(dir + "/weights.bin", backend.params_);
    if (manifest_out) *manifest_out = std::move(kv);
    return backend;
  }

  static std::shared_ptr<const Tokenizer> load_tokenizer_assets(const std::string& dir,
                                                                const BackendSpec& spec) {
    switch (spec.tokenizer) {
      case TokenizerKind::whitespace:
        return std::make_shared<WhitespaceTokenizer>(Vocab::from_file(dir + "/vocab.txt"));
      case TokenizerKind::wordpiece:
        return std::make_shared<WordPieceTokenizer>(Vocab::from_file(dir + "/vocab.txt"),
                                                    spec.lowercase);
      case TokenizerKind::byte_bpe:
        return std::make_shared<ByteBpeTokenizer>(dir + "/vocab.json", dir + "/merges.txt");
      case TokenizerKind::unigram:
        return std::make_shared<UnigramTokenizer>(dir + "/spm.vocab", spec.lowercase);
    }
    throw Error(Err::ConfigInvalid, "unknown tokenizer kind");
  }

  static void write_weights(const std::string& path, const ParamStore& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Err::IoError, "cannot write " + path);
    const char magic[4] = {'H', 'G', 'W', '1'};
    out.write(magic, 4);
    const uint32_t count = static_cast<uint32_t>(params.items().size());
    out.write(reinterpret_cast<const char*>(&count), sizeof(count));
    for (const auto& p : params.items()) {
      const uint32_t name_len = static_cast<uint32_t>(p->name.size());
      out.write(reinterpret_cast<const char*>(&name_len), sizeof(name_len));
      out.write(p->name.data(), name_len);
      const uint64_t rows = static_cast<uint64_t>(p->w.rows());
      const uint64_t cols = static_cast<uint64_t>(p->w.cols());
      out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
      out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
      out.write(reinterpret_cast<const char*>(p->w.data()),
                static_cast<std::streamsize>(sizeof(double) * p->w.size()));
    }
  }

  static void read_weights(const std::string& path, ParamStore& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Err::CheckpointMissing, "missing weights file " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "HGW1", 4) != 0) {
      throw Error(Err::CheckpointMissing, "bad weights magic in " + path);
    }
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    for (uint32_t i = 0; i < count; ++i) {
      uint32_t name_len = 0;
      in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      uint64_t rows = 0, cols = 0;
      in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
      in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
      Param* p = params.find(name);
      if (!p) throw Error(Err::CheckpointMissing, "unexpected tensor '" + name + "' in " + path);
      if (static_cast<uint64_t>(p->w.rows()) != rows ||
          static_cast<uint64_t>(p->w.cols()) != cols) {
        throw Error(Err::CheckpointMissing, "shape mismatch for tensor '" + name + "'");
      }
      in.read(reinterpret_cast<char*>(p->w.data()),
              static_cast<std::streamsize>(sizeof(double) * p->w.size()));
      if (!in) throw Error(Err::CheckpointMissing, "truncated weights file " + path);
    }
  }

 private:
  void build_params() {
    const int H = spec_.hidden_size;
    const int E = spec_.embedding_size;
    const int I = spec_.intermediate_size;
    word_emb_ = params_.add("emb.word", spec_.vocab_size, E);
    pos_emb_ = params_.add("emb.pos", spec_.max_positions, E);
    seg_emb_ = spec_.use_segments ? params_.add("emb.seg", 2, E) : nullptr;
    emb_ln_g_ = params_.add("emb.ln.g", E, 1);
    emb_ln_b_ = params_.add("emb.ln.b", E, 1);
    if (E != H) {
      emb_proj_w_ = params_.add("emb.proj.w", E, H);
      emb_proj_b_ = params_.add("emb.proj.b", H, 1);
    } else {
      emb_proj_w_ = emb_proj_b_ = nullptr;
    }
    const int distinct = spec_.shared_layers ? 1 : spec_.num_layers;
    layers_.clear();
    for (int l = 0; l < distinct; ++l) {
      const std::string pre =
          spec_.shared_layers ? "layer_shared." : "layer" + std::to_string(l) + ".";
      detail::LayerParams lp;
      lp.wq = params_.add(pre + "attn.wq", H, H);
      lp.bq = params_.add(pre + "attn.bq", H, 1);
      lp.wk = params_.add(pre + "attn.wk", H, H);
      lp.bk = params_.add(pre + "attn.bk", H, 1);
      lp.wv = params_.add(pre + "attn.wv", H, H);
      lp.bv = params_.add(pre + "attn.bv", H, 1);
      lp.wo = params_.add(pre + "attn.wo", H, H);
      lp.bo = params_.add(pre + "attn.bo", H, 1);
      lp.ln1_g = params_.add(pre + "ln1.g", H, 1);
      lp.ln1_b = params_.add(pre + "ln1.b", H, 1);
      lp.w1 = params_.add(pre + "ffn.w1", H, I);
      lp.b1 = params_.add(pre + "ffn.b1", I, 1);
      lp.w2 = params_.add(pre + "ffn.w2", I, H);
      lp.b2 = params_.add(pre + "ffn.b2", H, 1);
      lp.ln2_g = params_.add(pre + "ln2.g", H, 1);
      lp.ln2_b = params_.add(pre + "ln2.b", H, 1);
      layers_.push_back(lp);
    }
    if (spec_.has_pooler) {
      pooler_w_ = params_.add("pooler.w", H, H);
      pooler_b_ = params_.add("pooler.b", H, 1);
    } else {
      pooler_w_ = pooler_b_ = nullptr;
    }
    mlm_w_ = params_.add("mlm.transform.w", H, E);
    mlm_b_ = params_.add("mlm.transform.b", E, 1);
    mlm_ln_g_ = params_.add("mlm.ln.g", E, 1);
    mlm_ln_b_ = params_.add("mlm.ln.b", E, 1);
    mlm_bias_ = params_.add("mlm.bias", spec_.vocab_size, 1);
  }

  void init_weights(uint64_t seed) {
    Rng rng(seed ^ 0x5eedULL);
    const double std_dev = 0.02;
    for (const auto& p : params_.items()) {
      const std::string leaf = p->name.substr(p->name.rfind('.') + 1);
      if (leaf == "g") {
        p->w.setOnes();  // layer-norm gain
      } else if (!leaf.empty() && leaf[0] == 'b') {
        p->w.setZero();  // biases: b, bq..bo, b1, b2, bias; layer-norm shift
      } else {
        for (Eigen::Index i = 0; i < p->w.size(); ++i) p->w.data()[i] = rng.gaussian() * std_dev;
      }
    }
  }

  const detail::LayerParams& layer(int l) const {
    return layers_[spec_.shared_layers ? 0 : static_cast<size_t>(l)];
  }

  void write_manifest(const std::string& path,
                      const std::map<std::string, std::string>& extra) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Err::IoError, "cannot write " + path);
    out << "kind: " << (extra.count("kind") ? extra.at("kind") : "backend") << '\n';
    out << "family: " << family_str(spec_.family) << '\n';
    out << "provenance: " << weight_source_str(provenance_) << '\n';
    out << "tokenizer: " << tokenizer_kind_str(spec_.tokenizer) << '\n';
    out << "vocab_hash: " << hex64(tokenizer_->vocab_hash()) << '\n';
    out << "created: " << iso_timestamp() << '\n';
    out << "num_layers: " << spec_.num_layers << '\n';
    out << "num_heads: " << spec_.num_heads << '\n';
    out << "hidden_size: " << spec_.hidden_size << '\n';
    out << "intermediate_size: " << spec_.intermediate_size << '\n';
    out << "embedding_size: " << spec_.embedding_size << '\n';
    out << "max_positions: " << spec_.max_positions << '\n';
    out << "vocab_size: " << spec_.vocab_size << '\n';
    out << "cls_id: " << spec_.specials.cls << '\n';
    out << "sep_id: " << spec_.specials.sep << '\n';
    out << "pad_id: " << spec_.specials.pad << '\n';
    out << "mask_id: " << spec_.specials.mask << '\n';
    out << "unk_id: " << spec_.specials.unk << '\n';
    out << "use_segments: " << (spec_.use_segments ? 1 : 0) << '\n';
    out << "has_pooler: " << (spec_.has_pooler ? 1 : 0) << '\n';
    out << "shared_layers: " << (spec_.shared_layers ? 1 : 0) << '\n';
    out << "lowercase: " << (spec_.lowercase ? 1 : 0) << '\n';
    for (const auto& [k, v] : extra) {
      if (k != "kind") out << k << ": " << v << '\n';
    }
  }

  static std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
  }

  BackendSpec spec_;
  std::shared_ptr<const Tokenizer> tokenizer_;
  WeightSource provenance_;
  ParamStore params_;

  Param* word_emb_ = nullptr;
  Param* pos_emb_ = nullptr;
  Param* seg_emb_ = nullptr;
  Param* emb_ln_g_ = nullptr;
  Param* emb_ln_b_ = nullptr;
  Param* emb_proj_w_ = nullptr;
  Param* emb_proj_b_ = nullptr;
  std::vector<detail::LayerParams> layers_;
  Param* pooler_w_ = nullptr;
  Param* pooler_b_ = nullptr;
  Param* mlm_w_ = nullptr;
  Param* mlm_b_ = nullptr;
  Param* mlm_ln_g_ = nullptr;
  Param* mlm_ln_b_ = nullptr;
  Param* mlm_bias_ = nullptr;
};

// ---------------------------------------------------------------------------
// Backend loading per weight source.

// Environment variable naming the cache directory that holds converted
// published-pretrained checkpoints, one subdirectory per family.
inline constexpr const char* kCacheEnvVar = "HGRADE_CACHE";

struct LoadOptions {
  std::string checkpoint_path;   // lm_finetuned_checkpoint
  std::string cache_dir;         // published_pretrained (falls back to $HGRADE_CACHE)
  const Vocab* tiny_vocab = nullptr;  // tiny + random_init
  uint64_t seed = 1;
};

inline EncoderBackend make_tiny_backend(const Vocab& vocab, uint64_t seed,
                                        BackendSpec spec = family_defaults(Family::tiny)) {
  spec.vocab_size = vocab.size();
  auto tok = std::make_shared<WhitespaceTokenizer>(vocab);
  return EncoderBackend(spec, std::move(tok), WeightSource::random_init, seed);
}

inline EncoderBackend load_backend(const BackendSpec& spec, WeightSource source,
                                   const LoadOptions& opts = {}) {
  switch (source) {
    case WeightSource::random_init: {
      if (spec.family != Family::tiny) {
        throw Error(Err::UnsupportedCombination,
                    "random_init is only legal for the tiny family");
      }
      if (!opts.tiny_vocab) {
        throw Error(Err::ConfigInvalid, "tiny random_init requires a corpus vocabulary");
      }
      return make_tiny_backend(*opts.tiny_vocab, opts.seed, spec);
    }
    case WeightSource::lm_finetuned_checkpoint: {
      if (opts.checkpoint_path.empty() || !std::filesystem::exists(opts.checkpoint_path)) {
        throw Error(Err::CheckpointMissing,
                    "lm_finetuned_checkpoint requires an existing checkpoint path (got '" +
                        opts.checkpoint_path + "')");
      }
      EncoderBackend backend = EncoderBackend::load_checkpoint(opts.checkpoint_path);
      if (backend.spec().family != spec.family) {
        throw Error(Err::UnsupportedCombination,
                    std::string("checkpoint family ") + family_str(backend.spec().family) +
                        " does not match requested " + family_str(spec.family));
      }
      return backend;
    }
    case WeightSource::published_pretrained: {
      if (spec.family == Family::tiny) {
        throw Error(Err::UnsupportedCombination,
                    "the tiny family has no published pretrained weights");
      }
      std::string cache = opts.cache_dir;
      if (cache.empty()) {
        const char* env = std::getenv(kCacheEnvVar);
        cache = env ? env : "";
      }
      const std::string dir = cache + "/" + family_str(spec.family);
      if (cache.empty() || !std::filesystem::exists(dir)) {
        throw Error(Err::CheckpointMissing,
                    std::string("no converted pretrained checkpoint for ") +
                        family_str(spec.family) + " under '" + cache + "' (set " + kCacheEnvVar +
                        ")");
      }
      return EncoderBackend::load_checkpoint(dir);
    }
  }
  throw Error(Err::ConfigInvalid, "unknown weight source");
}

}  // namespace hgrade
