#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "hgrade/backend.hpp"
#include "hgrade/corpus.hpp"
#include "hgrade/encoding.hpp"
#include "hgrade/nn.hpp"

namespace hgrade {

// Initialization provenance recorded in checkpoints and report rows.
enum class InitProvenance { pretrained, lm_finetuned, random };

inline const char* init_provenance_str(InitProvenance p) {
  switch (p) {
    case InitProvenance::pretrained: return "pretrained";
    case InitProvenance::lm_finetuned: return "lm_finetuned";
    case InitProvenance::random: return "random";
  }
  return "?";
}

inline InitProvenance init_provenance_from_str(const std::string& s) {
  for (InitProvenance p :
       {InitProvenance::pretrained, InitProvenance::lm_finetuned, InitProvenance::random}) {
    if (s == init_provenance_str(p)) return p;
  }
  throw Error(Err::ConfigInvalid, "unknown init provenance '" + s + "'");
}

inline InitProvenance provenance_from_weight_source(WeightSource w) {
  switch (w) {
    case WeightSource::published_pretrained: return InitProvenance::pretrained;
    case WeightSource::lm_finetuned_checkpoint: return InitProvenance::lm_finetuned;
    case WeightSource::random_init: return InitProvenance::random;
  }
  return InitProvenance::random;
}

struct GradePrediction {
  std::string record_id;
  double grade = 0.0;  // clamped to [0, 3]
};

inline double clamp_grade(double g) { return std::min(3.0, std::max(0.0, g)); }

// Canonical formatting shared by every prediction file, so that labels can be
// cross-checked against grades at the byte level.
inline std::string format_grade(double g) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", g);
  return buf;
}

// ---------------------------------------------------------------------------
// Encoder + fully-connected head on the pooled output.

class GraderModel {
 public:
  explicit GraderModel(EncoderBackend backend, uint64_t head_seed = 7)
      : backend_(std::move(backend)),
        init_provenance_(provenance_from_weight_source(backend_.provenance())) {
    head_w_ = backend_.params().find("grader_head.w");
    head_b_ = backend_.params().find("grader_head.b");
    if (!head_w_) {
      head_w_ = backend_.params().add("grader_head.w", backend_.spec().hidden_size, 1);
      head_b_ = backend_.params().add("grader_head.b", 1, 1);
      Rng rng(head_seed ^ 0x6eadULL);
      for (Eigen::Index i = 0; i < head_w_->w.size(); ++i) {
        head_w_->w.data()[i] = rng.gaussian() * 0.02;  // small random weights, zero bias
      }
      head_b_->w.setZero();
    }
  }

  EncoderBackend& backend() { return backend_; }
  const EncoderBackend& backend() const { return backend_; }
  InitProvenance init_provenance() const { return init_provenance_; }
  void set_init_provenance(InitProvenance p) { init_provenance_ = p; }
  std::optional<SourceDataset> train_dataset() const { return train_dataset_; }
  void set_train_dataset(SourceDataset d) { train_dataset_ = d; }
  Param* head_w() { return head_w_; }
  Param* head_b() { return head_b_; }

  double raw_grade(const ForwardCache& cache) const {
    return head_w_->w.col(0).dot(cache.pooled) + head_b_->w(0, 0);
  }

  double predict_raw(const HeadlineRecord& record, const EncodeOptions& opts = {}) const {
    const EncodedPair ep = encode_record(backend_, record, opts);
    return raw_grade(backend_.forward(ep.input()));
  }

  double predict_one(const HeadlineRecord& record, const EncodeOptions& opts = {}) const {
    return clamp_grade(predict_raw(record, opts));
  }

  // --- checkpoints ---------------------------------------------------------

  void save(const std::string& dir) const {
    std::map<std::string, std::string> extra;
    extra["kind"] = "grader";
    extra["init_provenance"] = init_provenance_str(init_provenance_);
    extra["train_dataset"] = train_dataset_ ? dataset_str(*train_dataset_) : "none";
    backend_.save_checkpoint(dir, extra);
  }

  static GraderModel load(const std::string& dir) {
    std::map<std::string, std::string> manifest;
    EncoderBackend be = EncoderBackend::load_checkpoint(dir, &manifest, /*load_weights=*/false);
    if (!manifest.count("kind") || manifest.at("kind") != "grader") {
      throw Error(Err::CheckpointMissing, dir + " is not a grader checkpoint");
    }
    GraderModel model(std::move(be), 0);
    EncoderBackend::read_weights(dir + "/weights.bin", model.backend_.params());
    if (manifest.count("init_provenance")) {
      model.init_provenance_ = init_provenance_from_str(manifest.at("init_provenance"));
    }
    if (manifest.count("train_dataset") && manifest.at("train_dataset") != "none") {
      model.train_dataset_ = dataset_from_str(manifest.at("train_dataset"));
    }
    return model;
  }

 private:
  EncoderBackend backend_;
  InitProvenance init_provenance_;
  std::optional<SourceDataset> train_dataset_;
  Param* head_w_ = nullptr;
  Param* head_b_ = nullptr;
};

// ---------------------------------------------------------------------------
// Training

struct GraderTrainConfig {
  int epochs = 10;
  int batch = 16;
  double learn_rate = 1e-3;
  uint64_t seed = 7;
  int early_stop_patience = 2;
  EncodeOptions encode;
};

struct GraderTrainLog {
  std::vector<double> train_mse;  // per epoch, on raw (unclamped) outputs
  std::vector<double> dev_mse;    // per epoch, on clamped predictions
  int best_epoch = -1;            // 0-based index into the histories
  double best_dev_mse = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline std::vector<EncodedPair> encode_all(const EncoderBackend& backend,
                                           const std::vector<HeadlineRecord>& records,
                                           const EncodeOptions& opts) {
  std::vector<EncodedPair> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(encode_record(backend, r, opts));
  return out;
}

inline void require_grades(const std::vector<HeadlineRecord>& records, const char* which) {
  for (const auto& r : records) {
    if (!r.mean_grade) {
      throw Error(Err::MissingGrades,
                  std::string(which) + " record " + r.id + " has no mean grade");
    }
  }
}

}  // namespace detail

// Fine-tunes the encoder and regression head with a mean-squared-error
// objective; the returned weights are the epoch with the lowest dev MSE.
inline GraderTrainLog train_grader(GraderModel& model, const DatasetSplit& train,
                                   const DatasetSplit& dev, const GraderTrainConfig& config) {
  detail::require_grades(train.records, "train");
  detail::require_grades(dev.records, "dev");
  GraderTrainLog log;
  if (config.epochs <= 0) return log;
  if (train.records.empty()) throw Error(Err::EmptyCorpus, "empty training split");

  EncoderBackend& backend = model.backend();
  const std::vector<EncodedPair> train_enc =
      detail::encode_all(backend, train.records, config.encode);
  const std::vector<EncodedPair> dev_enc = detail::encode_all(backend, dev.records, config.encode);

  Adam opt(backend.params(), AdamConfig{config.learn_rate, 0.9, 0.999, 1e-8, 0});
  Rng rng(config.seed);

  std::vector<size_t> order(train_enc.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<Mat> best_weights;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double sq_sum = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch));
      const double inv_n = 1.0 / static_cast<double>(stop - start);
      backend.params().zero_grads();
      for (size_t i = start; i < stop; ++i) {
        const EncodedPair& ep = train_enc[order[i]];
        const double target = *train.records[order[i]].mean_grade;
        const ForwardCache cache = backend.forward(ep.input());
        const double pred = model.raw_grade(cache);
        const double err = pred - target;
        sq_sum += err * err;
        const double dpred = 2.0 * err * inv_n;
        model.head_w()->g.col(0).noalias() += cache.pooled * dpred;
        model.head_b()->g(0, 0) += dpred;
        const Vec dpooled = model.head_w()->w.col(0) * dpred;
        backend.backward(cache, &dpooled, nullptr);
      }
      opt.step(backend.params());
    }
    const double train_mse = sq_sum / static_cast<double>(train_enc.size());
    if (!std::isfinite(train_mse)) {
      throw Error(Err::DivergedLoss, "non-finite training loss at epoch " +
                                         std::to_string(epoch + 1));
    }
    log.train_mse.push_back(train_mse);

    double dev_sq = 0.0;
    for (size_t i = 0; i < dev_enc.size(); ++i) {
      const double pred = clamp_grade(model.raw_grade(backend.forward(dev_enc[i].input())));
      const double err = pred - *dev.records[i].mean_grade;
      dev_sq += err * err;
    }
    const double dev_mse =
        dev_enc.empty() ? train_mse : dev_sq / static_cast<double>(dev_enc.size());
    if (!std::isfinite(dev_mse)) {
      throw Error(Err::DivergedLoss, "non-finite dev loss at epoch " + std::to_string(epoch + 1));
    }
    log.dev_mse.push_back(dev_mse);

    if (log.best_epoch < 0 || dev_mse < log.best_dev_mse) {
      log.best_epoch = epoch;
      log.best_dev_mse = dev_mse;
      best_weights = backend.params().snapshot();
    } else if (epoch - log.best_epoch >= config.early_stop_patience) {
      break;  // dev MSE has not improved for `patience` epochs
    }
  }
  if (!best_weights.empty()) backend.params().restore(best_weights);
  return log;
}

// ---------------------------------------------------------------------------
// Batch inference

inline std::vector<GradePrediction> predict_grades(const GraderModel& model,
                                                   const std::vector<HeadlineRecord>& records,
                                                   const EncodeOptions& opts = {},
                                                   DiagList* diags = nullptr) {
  std::vector<GradePrediction> out;
  out.reserve(records.size());
  for (const auto& record : records) {
    const EncodedPair ep = encode_record(model.backend(), record, opts);
    if (ep.edit_dropped) {
      add_diag(diags, "TruncationDroppedEdit",
               "record " + record.id + ": edited tokens did not survive encoding");
    }
    const double grade =
        clamp_grade(model.raw_grade(model.backend().forward(ep.input())));
    out.push_back({record.id, grade});
  }
  return out;
}

// Two-column prediction CSV: id,pred.
inline void write_predictions_csv(std::ostream& out,
                                  const std::vector<GradePrediction>& preds) {
  out << "id,pred\n";
  for (const auto& p : preds) out << csv_quote(p.record_id) << ',' << format_grade(p.grade) << '\n';
}

}  // namespace hgrade
