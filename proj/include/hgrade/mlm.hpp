#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "hgrade/backend.hpp"
#include "hgrade/encoding.hpp"
#include "hgrade/nn.hpp"

namespace hgrade {

struct CorruptionSplit {
  double mask_p = 0.8;    // replace with the mask token
  double random_p = 0.1;  // replace with a uniformly random vocabulary id
  double keep_p = 0.1;    // keep the original id (still predicted)

  void validate() const {
    if (mask_p < 0 || random_p < 0 || keep_p < 0 ||
        std::abs(mask_p + random_p + keep_p - 1.0) > 1e-9) {
      throw Error(Err::ConfigInvalid, "corruption split must be non-negative and sum to 1");
    }
  }
};

// Which positions are predicted and how their input ids are corrupted.
// corrupted_ids holds only positions whose input id is actually replaced
// (mask/random cases); keep-case targets are predicted from the original id.
struct MaskingPlan {
  std::vector<int> target_positions;
  std::map<int, int> corrupted_ids;
  double mask_rate = 0.15;
  CorruptionSplit split;
};

// Every non-special, non-padding token is eligible; each eligible position is
// independently selected with probability mask_rate.
inline MaskingPlan build_masking_plan(const std::vector<int>& token_ids, double mask_rate,
                                      const CorruptionSplit& split, Rng& rng,
                                      const SpecialTokenIds& specials, int vocab_size) {
  if (!(mask_rate > 0.0) || mask_rate > 1.0) {
    throw Error(Err::ConfigInvalid, "mask_rate must lie in (0, 1]");
  }
  split.validate();
  MaskingPlan plan;
  plan.mask_rate = mask_rate;
  plan.split = split;
  for (size_t i = 0; i < token_ids.size(); ++i) {
    const int id = token_ids[i];
    if (id == specials.cls || id == specials.sep || id == specials.pad) continue;
    if (rng.uniform() >= mask_rate) continue;
    plan.target_positions.push_back(static_cast<int>(i));
    const double u = rng.uniform();
    if (u < split.mask_p) {
      plan.corrupted_ids[static_cast<int>(i)] = specials.mask;
    } else if (u < split.mask_p + split.random_p) {
      plan.corrupted_ids[static_cast<int>(i)] = static_cast<int>(rng.below(
          static_cast<uint64_t>(vocab_size)));
    }  // else: keep the original id
  }
  return plan;
}

inline std::vector<int> apply_masking_plan(const std::vector<int>& token_ids,
                                           const MaskingPlan& plan) {
  std::vector<int> out = token_ids;
  for (const auto& [pos, id] : plan.corrupted_ids) out[static_cast<size_t>(pos)] = id;
  return out;
}

// ---------------------------------------------------------------------------
// LM fine-tuning on edited headlines

struct MlmConfig {
  int epochs = 3;
  int batch = 16;
  int max_len = kMlmMaxLen;  // clipped to the backend's position table
  double learn_rate = 5e-5;
  uint64_t seed = 11;
  double mask_rate = 0.15;
  CorruptionSplit split;
  bool linear_decay = true;
};

struct MlmResult {
  std::vector<double> loss_history;  // mean loss per epoch, target positions only
  std::string checkpoint_dir;
};

// Plain-text loss table: "epoch<TAB>mean_loss" per line.
inline void write_loss_history(const std::string& path, const std::vector<double>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Err::IoError, "cannot write " + path);
  out << "epoch\tmean_loss\n";
  char buf[64];
  for (size_t i = 0; i < history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.8f\n", i + 1, history[i]);
    out << buf;
  }
}

// Domain-adapts the backend by masked-word prediction over the edited
// headline texts (callers must pass apply_edit outputs, never originals) and
// writes a checkpoint with provenance lm_finetuned_checkpoint.
inline MlmResult lm_finetune(EncoderBackend& backend, const std::vector<std::string>& corpus,
                             const MlmConfig& config, const std::string& checkpoint_dir) {
  if (corpus.empty()) throw Error(Err::EmptyCorpus, "LM fine-tuning corpus is empty");
  MlmResult result;
  result.checkpoint_dir = checkpoint_dir;

  std::vector<TokenizedInput> inputs;
  inputs.reserve(corpus.size());
  for (const auto& text : corpus) {
    inputs.push_back(backend.tokenize(text, std::nullopt, config.max_len).input);
  }

  Rng rng(config.seed);
  const size_t batches_per_epoch =
      (inputs.size() + static_cast<size_t>(config.batch) - 1) / static_cast<size_t>(config.batch);
  AdamConfig adam_cfg{config.learn_rate, 0.9, 0.999, 1e-8,
                      config.linear_decay
                          ? static_cast<int64_t>(batches_per_epoch) * config.epochs
                          : 0};
  Adam opt(backend.params(), adam_cfg);

  std::vector<size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), size_t{0});

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // dynamic masking: a fresh plan for every example, every epoch
    std::vector<MaskingPlan> plans;
    plans.reserve(inputs.size());
    for (const auto& input : inputs) {
      plans.push_back(build_masking_plan(input.ids, config.mask_rate, config.split, rng,
                                         backend.spec().specials, backend.spec().vocab_size));
    }
    rng.shuffle(order);

    double loss_sum = 0.0;
    size_t loss_count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch));
      size_t batch_targets = 0;
      for (size_t i = start; i < stop; ++i) {
        batch_targets += plans[order[i]].target_positions.size();
      }
      if (batch_targets == 0) continue;
      const double inv_t = 1.0 / static_cast<double>(batch_targets);

      backend.params().zero_grads();
      for (size_t i = start; i < stop; ++i) {
        const TokenizedInput& clean = inputs[order[i]];
        const MaskingPlan& plan = plans[order[i]];
        if (plan.target_positions.empty()) continue;
        TokenizedInput corrupted = clean;
        corrupted.ids = apply_masking_plan(clean.ids, plan);

        const ForwardCache cache = backend.forward(corrupted);
        const MlmCache mc = backend.mlm_head(cache, plan.target_positions);

        // softmax cross-entropy at the target positions, on the original ids
        Mat dlogits(mc.logits.rows(), mc.logits.cols());
        for (Eigen::Index r = 0; r < mc.logits.rows(); ++r) {
          const int gold = clean.ids[static_cast<size_t>(plan.target_positions[
              static_cast<size_t>(r)])];
          const double mx = mc.logits.row(r).maxCoeff();
          const Eigen::Array<double, 1, Eigen::Dynamic> ex =
              (mc.logits.row(r).array() - mx).exp();
          const double denom = ex.sum();
          loss_sum += std::log(denom) - (mc.logits(r, gold) - mx);
          ++loss_count;
          dlogits.row(r) = (ex / denom).matrix() * inv_t;
          dlogits(r, gold) -= inv_t;
        }
        EncoderBackend& b = backend;
        const Mat d_states = b.mlm_backward(cache, mc, dlogits);
        b.backward(cache, nullptr, &d_states);
      }
      opt.step(backend.params());
    }
    const double mean_loss =
        loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    if (!std::isfinite(mean_loss)) {
      throw Error(Err::DivergedLoss,
                  "non-finite LM loss at epoch " + std::to_string(epoch + 1));
    }
    result.loss_history.push_back(mean_loss);
  }

  backend.set_provenance(WeightSource::lm_finetuned_checkpoint);
  backend.save_checkpoint(checkpoint_dir);
  write_loss_history(checkpoint_dir + "/loss_history.txt", result.loss_history);
  return result;
}

}  // namespace hgrade
