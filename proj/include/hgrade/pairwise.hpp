#pragma once

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "hgrade/corpus.hpp"
#include "hgrade/grader.hpp"

namespace hgrade {

// 1 if A is funnier by more than tie_epsilon, 2 if B is, else 0.
inline int pair_label(double grade_a, double grade_b, double tie_epsilon = 0.0) {
  if (!std::isfinite(grade_a) || !std::isfinite(grade_b)) {
    throw Error(Err::NonFiniteGrade, "pair_label requires finite grades");
  }
  if (tie_epsilon < 0.0) throw Error(Err::ConfigInvalid, "tie_epsilon must be >= 0");
  if (grade_a - grade_b > tie_epsilon) return 1;
  if (grade_b - grade_a > tie_epsilon) return 2;
  return 0;
}

struct PairPrediction {
  std::string pair_id;
  std::string grade_a_str;  // canonical formatted grades; the label is derived
  std::string grade_b_str;  // from these so files cross-check at byte level
  double grade_a = 0.0;
  double grade_b = 0.0;
  int label = 0;
};

// Zero-shot sub-task 2: grade both edits with the trained grader and emit the
// comparison label. No pair-specific training happens here.
inline std::vector<PairPrediction> predict_pairs(const GraderModel& model,
                                                 const std::vector<PairRecord>& pairs,
                                                 double tie_epsilon = 0.0,
                                                 const EncodeOptions& opts = {},
                                                 DiagList* diags = nullptr) {
  std::vector<PairPrediction> out;
  out.reserve(pairs.size());
  for (const auto& pair : pairs) {
    std::vector<HeadlineRecord> two{pair.record_a, pair.record_b};
    const std::vector<GradePrediction> grades = predict_grades(model, two, opts, diags);
    PairPrediction p;
    p.pair_id = pair.id;
    p.grade_a_str = format_grade(grades[0].grade);
    p.grade_b_str = format_grade(grades[1].grade);
    // Labels are computed from the formatted values, so a reader of the grade
    // file reproduces the label file exactly.
    p.grade_a = std::strtod(p.grade_a_str.c_str(), nullptr);
    p.grade_b = std::strtod(p.grade_b_str.c_str(), nullptr);
    p.label = pair_label(p.grade_a, p.grade_b, tie_epsilon);
    out.push_back(std::move(p));
  }
  return out;
}

// Two-column prediction CSV: id,pred.
inline void write_pair_labels_csv(std::ostream& out, const std::vector<PairPrediction>& preds) {
  out << "id,pred\n";
  for (const auto& p : preds) out << csv_quote(p.pair_id) << ',' << p.label << '\n';
}

// Companion file holding the two grades behind every label.
inline void write_pair_grades_csv(std::ostream& out, const std::vector<PairPrediction>& preds) {
  out << "id,grade_a,grade_b\n";
  for (const auto& p : preds) {
    out << csv_quote(p.pair_id) << ',' << p.grade_a_str << ',' << p.grade_b_str << '\n';
  }
}

}  // namespace hgrade
