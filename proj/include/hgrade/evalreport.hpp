#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "hgrade/corpus.hpp"
#include "hgrade/grader.hpp"
#include "hgrade/pairwise.hpp"

namespace hgrade {

// ---------------------------------------------------------------------------
// Metrics

inline double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
  if (pred.size() != truth.size()) {
    throw Error(Err::LengthMismatch, "rmse: " + std::to_string(pred.size()) + " predictions vs " +
                                         std::to_string(truth.size()) + " truths");
  }
  if (pred.empty()) throw Error(Err::EmptyInput, "rmse of empty lists");
  double sq = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(pred.size()));
}

inline double categorical_accuracy(const std::vector<int>& pred_labels,
                                   const std::vector<int>& gold_labels) {
  if (pred_labels.size() != gold_labels.size()) {
    throw Error(Err::LengthMismatch, "accuracy: prediction/gold lists differ in length");
  }
  if (pred_labels.empty()) throw Error(Err::EmptyInput, "accuracy of empty lists");
  size_t hits = 0;
  for (size_t i = 0; i < pred_labels.size(); ++i) {
    if (pred_labels[i] == gold_labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred_labels.size());
}

// ---------------------------------------------------------------------------
// Report cells

enum class MetricName {
  rmse_task1_test,          // Humicroedit sub-task-1 test RMSE
  acc_task2_test,           // Humicroedit sub-task-2 official test accuracy
  acc_task2_all,            // Humicroedit sub-task-2 accuracy over the entire dataset
  rmse_task1_funlines,      // FunLines sub-task-1 test RMSE (our splits)
  acc_task2_funlines_all,   // FunLines sub-task-2 accuracy over the entire dataset
};

inline constexpr std::array<MetricName, 5> kMetricOrder = {
    MetricName::rmse_task1_test, MetricName::acc_task2_test, MetricName::acc_task2_all,
    MetricName::rmse_task1_funlines, MetricName::acc_task2_funlines_all};

inline const char* metric_str(MetricName m) {
  switch (m) {
    case MetricName::rmse_task1_test: return "rmse_task1_test";
    case MetricName::acc_task2_test: return "acc_task2_test";
    case MetricName::acc_task2_all: return "acc_task2_all";
    case MetricName::rmse_task1_funlines: return "rmse_task1_funlines";
    case MetricName::acc_task2_funlines_all: return "acc_task2_funlines_all";
  }
  return "?";
}

struct EvalCell {
  Family family = Family::tiny;
  SourceDataset train_dataset = SourceDataset::humicroedit;
  bool lm_finetuned = false;
  MetricName metric = MetricName::rmse_task1_test;
  double value = 0.0;
  uint64_t seed = 0;

  std::tuple<int, int, int, int> key() const {
    return {static_cast<int>(family), static_cast<int>(train_dataset), lm_finetuned ? 1 : 0,
            static_cast<int>(metric)};
  }
};

struct EvalReport {
  std::vector<EvalCell> cells;
  std::string config_hash;

  void add(EvalCell cell) {
    if (cell.value < 0.0) throw Error(Err::ConfigInvalid, "metric value must be >= 0");
    const bool is_accuracy = cell.metric != MetricName::rmse_task1_test &&
                             cell.metric != MetricName::rmse_task1_funlines;
    if (is_accuracy && cell.value > 1.0) {
      throw Error(Err::ConfigInvalid, "accuracy above 1");
    }
    for (const auto& existing : cells) {
      if (existing.key() == cell.key()) {
        throw Error(Err::ConfigInvalid,
                    std::string("duplicate report cell for metric ") + metric_str(cell.metric));
      }
    }
    cells.push_back(cell);
  }

  const EvalCell* find(Family f, SourceDataset train, bool lm, MetricName m) const {
    for (const auto& c : cells) {
      if (c.family == f && c.train_dataset == train && c.lm_finetuned == lm && c.metric == m) {
        return &c;
      }
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Cross-dataset evaluation

// Evaluation assets for one corpus. Absent members are only an error when a
// requested metric needs them.
struct EvalDataset {
  SourceDataset dataset = SourceDataset::humicroedit;
  std::optional<DatasetSplit> task1_test;
  std::optional<std::vector<PairRecord>> task2_test;  // official test split
  std::optional<std::vector<PairRecord>> task2_all;   // train + dev + test
};

struct EvalModelEntry {
  const GraderModel* model = nullptr;
  uint64_t seed = 0;
};

namespace detail {

inline double eval_rmse_on_split(const GraderModel& model, const DatasetSplit& split,
                                 const EncodeOptions& opts) {
  require_grades(split.records, "eval");
  const std::vector<GradePrediction> preds = predict_grades(model, split.records, opts);
  std::vector<double> p, t;
  p.reserve(preds.size());
  t.reserve(preds.size());
  for (size_t i = 0; i < preds.size(); ++i) {
    p.push_back(preds[i].grade);
    t.push_back(*split.records[i].mean_grade);
  }
  return rmse(p, t);
}

inline double eval_accuracy_on_pairs(const GraderModel& model,
                                     const std::vector<PairRecord>& pairs, double tie_epsilon,
                                     const EncodeOptions& opts) {
  std::vector<int> pred, gold;
  pred.reserve(pairs.size());
  gold.reserve(pairs.size());
  const std::vector<PairPrediction> pp = predict_pairs(model, pairs, tie_epsilon, opts);
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].gold_label) {
      throw Error(Err::MissingGrades, "pair " + pairs[i].id + " has no gold label");
    }
    pred.push_back(pp[i].label);
    gold.push_back(*pairs[i].gold_label);
  }
  return categorical_accuracy(pred, gold);
}

}  // namespace detail

// Evaluates every model against both corpora: its own test split and the other
// dataset's evaluation sets. Sub-task-2 uses the whole pair dataset (train +
// dev + test treated as test), plus the official test split for Humicroedit.
inline EvalReport cross_dataset_eval(const std::vector<EvalModelEntry>& models,
                                     const std::vector<EvalDataset>& datasets,
                                     double tie_epsilon = 0.0, const EncodeOptions& opts = {},
                                     const std::string& config_hash = "") {
  EvalReport report;
  report.config_hash = config_hash;

  const EvalDataset* humicroedit = nullptr;
  const EvalDataset* funlines = nullptr;
  for (const auto& d : datasets) {
    if (d.dataset == SourceDataset::humicroedit) humicroedit = &d;
    else funlines = &d;
  }

  for (const auto& entry : models) {
    if (!entry.model) throw Error(Err::ConfigInvalid, "null model in evaluation list");
    const GraderModel& model = *entry.model;
    if (!model.train_dataset()) {
      throw Error(Err::ConfigInvalid, "model without a recorded training dataset");
    }
    EvalCell base;
    base.family = model.backend().spec().family;
    base.train_dataset = *model.train_dataset();
    base.lm_finetuned = model.init_provenance() == InitProvenance::lm_finetuned;
    base.seed = entry.seed;

    auto missing = [](const char* what) {
      return Error(Err::MissingSplit, std::string("evaluation dataset lacks ") + what);
    };
    if (humicroedit) {
      if (!humicroedit->task1_test) throw missing("humicroedit task-1 test split");
      if (!humicroedit->task2_test) throw missing("humicroedit task-2 test pairs");
      if (!humicroedit->task2_all) throw missing("humicroedit task-2 full pair set");
      EvalCell c = base;
      c.metric = MetricName::rmse_task1_test;
      c.value = detail::eval_rmse_on_split(model, *humicroedit->task1_test, opts);
      report.add(c);
      c.metric = MetricName::acc_task2_test;
      c.value = detail::eval_accuracy_on_pairs(model, *humicroedit->task2_test, tie_epsilon, opts);
      report.add(c);
      c.metric = MetricName::acc_task2_all;
      c.value = detail::eval_accuracy_on_pairs(model, *humicroedit->task2_all, tie_epsilon, opts);
      report.add(c);
    }
    if (funlines) {
      if (!funlines->task1_test) throw missing("funlines task-1 test split");
      if (!funlines->task2_all) throw missing("funlines task-2 full pair set");
      EvalCell c = base;
      c.metric = MetricName::rmse_task1_funlines;
      c.value = detail::eval_rmse_on_split(model, *funlines->task1_test, opts);
      report.add(c);
      c.metric = MetricName::acc_task2_funlines_all;
      c.value = detail::eval_accuracy_on_pairs(model, *funlines->task2_all, tie_epsilon, opts);
      report.add(c);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Rendering

namespace detail {

inline std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  return buf;
}

// Distinct (family, train_dataset, lm) rows in first-seen order.
inline std::vector<std::tuple<Family, SourceDataset, bool, uint64_t>> report_rows(
    const EvalReport& report) {
  std::vector<std::tuple<Family, SourceDataset, bool, uint64_t>> rows;
  for (const auto& c : report.cells) {
    bool seen = false;
    for (const auto& r : rows) {
      if (std::get<0>(r) == c.family && std::get<1>(r) == c.train_dataset &&
          std::get<2>(r) == c.lm_finetuned) {
        seen = true;
        break;
      }
    }
    if (!seen) rows.emplace_back(c.family, c.train_dataset, c.lm_finetuned, c.seed);
  }
  return rows;
}

}  // namespace detail

enum class ReportFormat { text_table, csv };

inline std::string render_report(const EvalReport& report, ReportFormat format) {
  const auto rows = detail::report_rows(report);
  std::ostringstream out;
  if (format == ReportFormat::csv) {
    out << "family,train_dataset,lm_finetuned";
    for (MetricName m : kMetricOrder) out << ',' << metric_str(m);
    out << ",seed,config_hash\n";
    for (const auto& [fam, train, lm, seed] : rows) {
      out << family_str(fam) << ',' << dataset_str(train) << ',' << (lm ? 1 : 0);
      for (MetricName m : kMetricOrder) {
        const EvalCell* c = report.find(fam, train, lm, m);
        out << ',' << (c ? detail::format_metric(c->value) : "");
      }
      out << ',' << seed << ',' << report.config_hash << '\n';
    }
    return out.str();
  }

  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %-12s %-6s %-10s %-10s %-10s %-10s %-10s\n", "family",
                "train", "lm_ft", "rmse_t1", "acc_t2", "acc_t2all", "rmse_fl", "acc_flall");
  out << line;
  for (const auto& [fam, train, lm, seed] : rows) {
    (void)seed;
    std::string cols[5];
    for (size_t i = 0; i < kMetricOrder.size(); ++i) {
      const EvalCell* c = report.find(fam, train, lm, kMetricOrder[i]);
      cols[i] = c ? detail::format_metric(c->value) : "-";
    }
    std::snprintf(line, sizeof(line), "%-24s %-12s %-6s %-10s %-10s %-10s %-10s %-10s\n",
                  family_str(fam), dataset_str(train), lm ? "yes" : "no", cols[0].c_str(),
                  cols[1].c_str(), cols[2].c_str(), cols[3].c_str(), cols[4].c_str());
    out << line;
  }
  return out.str();
}

}  // namespace hgrade
