#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "hgrade/encoding.hpp"
#include "hgrade/grader.hpp"

namespace hgrade {

// Fraction of the CLS token's attention mass landing on the edited tokens,
// among all non-special tokens (special-token attention sinks excluded).
inline double edited_attention_share(const Vec& attn_row, const std::vector<int>& edited_positions,
                                     const std::vector<int>& non_special_positions) {
  if (non_special_positions.empty()) {
    throw Error(Err::EmptyDenominator, "no non-special key positions");
  }
  std::unordered_set<int> non_special(non_special_positions.begin(),
                                      non_special_positions.end());
  double denom = 0.0;
  for (int p : non_special_positions) denom += attn_row(p);
  if (!(denom > 0.0)) throw Error(Err::EmptyDenominator, "zero attention mass on content tokens");
  double num = 0.0;
  for (int p : edited_positions) {
    if (!non_special.count(p)) {
      throw Error(Err::ConfigInvalid, "edited position outside the non-special set");
    }
    num += attn_row(p);
  }
  return num / denom;
}

struct AttentionSummary {
  std::string record_id;
  std::vector<double> per_head_edited_share;  // final layer, CLS query row
  double abs_error = std::numeric_limits<double>::quiet_NaN();
};

// Final-layer CLS attention shares for one record; abs_error filled when the
// record carries a gold grade.
inline AttentionSummary attention_summary(const GraderModel& model, const HeadlineRecord& record,
                                          const EncodeOptions& opts = {}) {
  const EncodedPair ep = encode_record_strict(model.backend(), record, opts);
  const ForwardCache cache = model.backend().forward(ep.input());
  const std::vector<int> non_special = ep.enc.non_special_indices();

  AttentionSummary summary;
  summary.record_id = record.id;
  const auto& final_attn = cache.layers.back().attn;
  summary.per_head_edited_share.reserve(final_attn.size());
  for (const Mat& head : final_attn) {
    const Vec row = head.row(0).transpose();  // CLS query
    summary.per_head_edited_share.push_back(
        edited_attention_share(row, ep.edited_token_positions, non_special));
  }
  if (record.mean_grade) {
    const double grade = clamp_grade(model.raw_grade(cache));
    summary.abs_error = std::abs(grade - *record.mean_grade);
  }
  return summary;
}

struct DatasetAttentionReport {
  std::vector<AttentionSummary> best;   // lowest absolute error
  std::vector<AttentionSummary> worst;  // highest absolute error
  Mat per_head_means;                   // 2 x num_heads: row 0 best, row 1 worst
};

// Best/worst predictions by absolute grade error with group-mean shares.
// Deterministic: abs_error ties are broken by record id.
inline DatasetAttentionReport summarize_dataset(const GraderModel& model,
                                                const std::vector<HeadlineRecord>& records,
                                                int top_k, const EncodeOptions& opts = {}) {
  if (top_k <= 0) throw Error(Err::ConfigInvalid, "top_k must be positive");
  std::vector<AttentionSummary> all;
  all.reserve(records.size());
  for (const auto& record : records) {
    if (!record.mean_grade) {
      throw Error(Err::MissingGrades, "record " + record.id + " has no gold grade");
    }
    all.push_back(attention_summary(model, record, opts));
  }
  if (all.empty()) throw Error(Err::EmptyInput, "no records to summarize");

  std::vector<size_t> by_error(all.size());
  std::iota(by_error.begin(), by_error.end(), size_t{0});
  std::sort(by_error.begin(), by_error.end(), [&](size_t a, size_t b) {
    if (all[a].abs_error != all[b].abs_error) return all[a].abs_error < all[b].abs_error;
    return all[a].record_id < all[b].record_id;
  });

  const size_t k = std::min(static_cast<size_t>(top_k), all.size());
  DatasetAttentionReport report;
  for (size_t i = 0; i < k; ++i) report.best.push_back(all[by_error[i]]);
  for (size_t i = 0; i < k; ++i) report.worst.push_back(all[by_error[all.size() - 1 - i]]);

  const auto heads = static_cast<Eigen::Index>(all.front().per_head_edited_share.size());
  report.per_head_means = Mat::Zero(2, heads);
  for (const auto& s : report.best) {
    for (Eigen::Index h = 0; h < heads; ++h) {
      report.per_head_means(0, h) += s.per_head_edited_share[static_cast<size_t>(h)];
    }
  }
  for (const auto& s : report.worst) {
    for (Eigen::Index h = 0; h < heads; ++h) {
      report.per_head_means(1, h) += s.per_head_edited_share[static_cast<size_t>(h)];
    }
  }
  report.per_head_means /= static_cast<double>(k);
  return report;
}

// CSV of per-head shares; head columns are 1-based to match the convention
// "2nd head", "12th head".
inline void write_shares_csv(std::ostream& out, const std::vector<AttentionSummary>& summaries,
                             int num_heads) {
  out << "record_id,abs_error";
  for (int h = 1; h <= num_heads; ++h) out << ",head_" << h;
  out << '\n';
  char buf[32];
  for (const auto& s : summaries) {
    out << csv_quote(s.record_id);
    if (std::isnan(s.abs_error)) {
      out << ',';
    } else {
      std::snprintf(buf, sizeof(buf), ",%.6f", s.abs_error);
      out << buf;
    }
    for (double share : s.per_head_edited_share) {
      std::snprintf(buf, sizeof(buf), ",%.6f", share);
      out << buf;
    }
    out << '\n';
  }
}

namespace detail {

inline std::string html_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

// Self-contained static document visualizing the CLS token's final-layer
// attention per head; edited tokens are highlighted. No scripts, no external
// resources, nothing to serve.
inline std::string emit_attention_html(const GraderModel& model, const HeadlineRecord& record,
                                       const EncodeOptions& opts = {}) {
  const EncodedPair ep = encode_record_strict(model.backend(), record, opts);
  const ForwardCache cache = model.backend().forward(ep.input());
  const auto& final_attn = cache.layers.back().attn;
  const double grade = clamp_grade(model.raw_grade(cache));
  const std::unordered_set<int> edited(ep.edited_token_positions.begin(),
                                       ep.edited_token_positions.end());

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
  html << "<title>CLS attention " << detail::html_escape(record.id) << "</title>\n";
  html << "<style>\n"
          "body{font-family:sans-serif;margin:2em;background:#fff;color:#111}\n"
          ".head{margin:0.8em 0}\n"
          ".tok{display:inline-block;padding:2px 5px;margin:1px;border-radius:3px;"
          "background:rgba(30,90,200,var(--a));border:1px solid #ccc}\n"
          ".tok.edited{border:2px solid #c22}\n"
          ".tok.special{color:#888;border-style:dashed}\n"
          "caption,td,th{padding:2px 8px;text-align:left}\n"
          "</style>\n</head>\n<body>\n";
  html << "<h1>Final-layer CLS attention</h1>\n";
  html << "<p>record <b>" << detail::html_escape(record.id) << "</b>";
  char buf[64];
  std::snprintf(buf, sizeof(buf), ", predicted grade %.3f", grade);
  html << buf;
  if (record.mean_grade) {
    std::snprintf(buf, sizeof(buf), ", gold %.3f", *record.mean_grade);
    html << buf;
  }
  html << "</p>\n";
  html << "<p>original: " << detail::html_escape(strip_edit(record.original_marked))
       << "<br>edited: "
       << detail::html_escape(apply_edit(record.original_marked, record.edit_word)) << "</p>\n";
  html << "<p>Shade = attention weight of the CLS query on each key token; red outline = "
          "tokens of the replacement word. The share metric below normalizes over non-special "
          "tokens only (one operationalization of edited-word attention).</p>\n";

  const std::vector<int> non_special = ep.enc.non_special_indices();
  for (size_t h = 0; h < final_attn.size(); ++h) {
    const Mat& a = final_attn[h];
    const Vec row = a.row(0).transpose();
    const double share = edited_attention_share(row, ep.edited_token_positions, non_special);
    std::snprintf(buf, sizeof(buf), " &mdash; edited share %.4f", share);
    html << "<div class=\"head\"><b>head " << (h + 1) << "</b>" << buf << "<br>\n";
    const double peak = row.maxCoeff();
    for (size_t t = 0; t < ep.enc.input.ids.size(); ++t) {
      const double alpha = peak > 0 ? row(static_cast<Eigen::Index>(t)) / peak : 0.0;
      std::string cls = "tok";
      if (edited.count(static_cast<int>(t))) cls += " edited";
      if (ep.enc.special[t]) cls += " special";
      std::snprintf(buf, sizeof(buf), "%.3f", alpha);
      html << "<span class=\"" << cls << "\" style=\"--a:" << buf << "\" title=\"";
      std::snprintf(buf, sizeof(buf), "%.5f", row(static_cast<Eigen::Index>(t)));
      html << buf << "\">"
           << detail::html_escape(
                  model.backend().tokenizer().id_to_token(ep.enc.input.ids[t]))
           << "</span>";
    }
    html << "\n</div>\n";
  }
  html << "</body>\n</html>\n";
  return html.str();
}

}  // namespace hgrade
