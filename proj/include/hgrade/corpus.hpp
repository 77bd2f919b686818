#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hgrade/csv.hpp"
#include "hgrade/errors.hpp"
#include "hgrade/rng.hpp"
#include "hgrade/text.hpp"

namespace hgrade {

// One original headline with a single substitution edit. The marked span uses
// the dataset release syntax: "US Navy ship fired <warning/> shots ...".
struct HeadlineRecord {
  std::string id;
  std::string original_marked;
  std::string edit_word;
  std::optional<std::vector<int>> annotator_grades;
  std::optional<double> mean_grade;  // absent for blind (inference-only) records

  bool blind() const { return !mean_grade.has_value(); }
  bool operator==(const HeadlineRecord&) const = default;
};

// Two edits of the same original headline. gold_label: 0 = equally funny,
// 1 = A funnier, 2 = B funnier.
struct PairRecord {
  std::string id;
  HeadlineRecord record_a;
  HeadlineRecord record_b;
  std::optional<int> gold_label;

  bool operator==(const PairRecord&) const = default;
};

enum class SplitName { train, dev, test };
enum class SourceDataset { humicroedit, funlines };

inline const char* split_name_str(SplitName s) {
  switch (s) {
    case SplitName::train: return "train";
    case SplitName::dev: return "dev";
    case SplitName::test: return "test";
  }
  return "?";
}

inline const char* dataset_str(SourceDataset d) {
  return d == SourceDataset::humicroedit ? "humicroedit" : "funlines";
}

inline SourceDataset dataset_from_str(const std::string& s) {
  if (s == "humicroedit") return SourceDataset::humicroedit;
  if (s == "funlines") return SourceDataset::funlines;
  throw Error(Err::ConfigInvalid, "unknown dataset '" + s + "'");
}

template <typename RecordT>
struct Split {
  SplitName name = SplitName::train;
  SourceDataset source = SourceDataset::humicroedit;
  std::vector<RecordT> records;
};

using DatasetSplit = Split<HeadlineRecord>;
using PairSplit = Split<PairRecord>;

// Default seed used to regenerate FunLines sub-task-1 splits when no official
// split files exist.
inline constexpr uint64_t kDefaultSplitSeed = 42;

// ---------------------------------------------------------------------------
// Edit markers

struct EditSpan {
  size_t begin = 0;  // offset of '<'
  size_t end = 0;    // offset one past "/>"
  std::string word;  // original word inside the marker
};

// Locates the single <word/> span. Throws MalformedEditMarker when there is
// no span, more than one, or a stray unterminated marker.
inline EditSpan find_edit_span(const std::string& marked) {
  std::optional<EditSpan> found;
  size_t pos = 0;
  while (pos < marked.size()) {
    const size_t lt = marked.find('<', pos);
    if (lt == std::string::npos) break;
    const size_t close = marked.find("/>", lt + 1);
    if (close == std::string::npos) {
      throw Error(Err::MalformedEditMarker, "unterminated edit marker in: " + marked);
    }
    const std::string inner = marked.substr(lt + 1, close - lt - 1);
    if (inner.find('<') != std::string::npos) {
      throw Error(Err::MalformedEditMarker, "nested '<' inside edit marker in: " + marked);
    }
    if (found) {
      throw Error(Err::MalformedEditMarker, "more than one edit marker in: " + marked);
    }
    found = EditSpan{lt, close + 2, inner};
    pos = close + 2;
  }
  if (!found) {
    throw Error(Err::MalformedEditMarker, "no edit marker in: " + marked);
  }
  return *found;
}

// apply_edit, also reporting the byte span of the inserted replacement word
// inside the returned string.
inline std::string apply_edit_spanned(const std::string& original_marked,
                                      const std::string& edit_word,
                                      CharSpan* replaced_span = nullptr) {
  const EditSpan span = find_edit_span(original_marked);
  std::string out = original_marked.substr(0, span.begin);
  const int b = static_cast<int>(out.size());
  out += edit_word;
  const int e = static_cast<int>(out.size());
  out += original_marked.substr(span.end);
  if (replaced_span) *replaced_span = {b, e};
  return out;
}

// Headline with the marked span replaced by edit_word, markers removed.
inline std::string apply_edit(const std::string& original_marked, const std::string& edit_word) {
  return apply_edit_spanned(original_marked, edit_word, nullptr);
}

// Headline with the markers removed and the original word kept.
inline std::string strip_edit(const std::string& original_marked, CharSpan* kept_span = nullptr) {
  const EditSpan span = find_edit_span(original_marked);
  return apply_edit_spanned(original_marked, span.word, kept_span);
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline double parse_real(const std::string& s, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw Error(Err::GradeOutOfRange, "cannot parse " + what + " '" + s + "'");
  }
  return v;
}

// Grades arrive as a digit string ("33322" = five annotators). Each character
// is one annotator grade in {0,1,2,3}.
inline std::vector<int> parse_grade_string(const std::string& s) {
  std::vector<int> grades;
  grades.reserve(s.size());
  for (char c : s) {
    if (c < '0' || c > '3') {
      throw Error(Err::GradeOutOfRange, "annotator grade '" + std::string(1, c) +
                                            "' outside {0,1,2,3} in grades '" + s + "'");
    }
    grades.push_back(c - '0');
  }
  return grades;
}

struct GradeColumns {
  int grades = -1;
  int mean = -1;
};

// Fills grades/mean on the record from one row. The mean is recomputed from
// the annotator grades; the file's mean column is cross-checked (mismatch
// beyond 1e-6 is reported as a warning, the recomputed value wins).
inline void fill_grades(HeadlineRecord& rec, const std::vector<std::string>& row,
                        const GradeColumns& cols, DiagList* diags) {
  std::optional<double> file_mean;
  if (cols.mean >= 0 && !trim(row[static_cast<size_t>(cols.mean)]).empty()) {
    file_mean = parse_real(std::string(trim(row[static_cast<size_t>(cols.mean)])), "mean grade");
  }
  if (cols.grades >= 0 && !trim(row[static_cast<size_t>(cols.grades)]).empty()) {
    rec.annotator_grades =
        parse_grade_string(std::string(trim(row[static_cast<size_t>(cols.grades)])));
    const auto& g = *rec.annotator_grades;
    const double mean =
        std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    rec.mean_grade = mean;
    if (file_mean && std::abs(*file_mean - mean) > 1e-6) {
      add_diag(diags, "MeanMismatch",
               "record " + rec.id + ": file mean " + std::to_string(*file_mean) +
                   " differs from recomputed " + std::to_string(mean));
    }
  } else if (file_mean) {
    rec.mean_grade = file_mean;
  }
  if (rec.mean_grade && (*rec.mean_grade < 0.0 || *rec.mean_grade > 3.0)) {
    throw Error(Err::GradeOutOfRange,
                "record " + rec.id + ": mean grade " + std::to_string(*rec.mean_grade) +
                    " outside [0, 3]");
  }
}

inline int require_col(const CsvTable& t, const std::string& name, const std::string& path) {
  const int c = t.col(name);
  if (c < 0) throw Error(Err::MissingColumn, "column '" + name + "' missing in " + path);
  return c;
}

}  // namespace detail

// Parses a sub-task-1 file: columns id, original (marked), edit, and
// optionally grades / meanGrade (absent in blind test files). Rows with
// malformed edit markers are rejected with an error, never skipped.
inline std::vector<HeadlineRecord> parse_task1_file(const std::string& path,
                                                    DiagList* diags = nullptr) {
  const CsvTable t = read_csv_file(path);
  if (t.header.empty()) throw Error(Err::MissingColumn, "empty file " + path);
  const int c_id = detail::require_col(t, "id", path);
  const int c_orig = detail::require_col(t, "original", path);
  const int c_edit = detail::require_col(t, "edit", path);
  const detail::GradeColumns gcols{t.col("grades"), t.col("meanGrade")};

  std::vector<HeadlineRecord> records;
  records.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() < t.header.size()) {
      throw Error(Err::MissingColumn,
                  "row with " + std::to_string(row.size()) + " fields (header has " +
                      std::to_string(t.header.size()) + ") in " + path);
    }
    HeadlineRecord rec;
    rec.id = row[static_cast<size_t>(c_id)];
    rec.original_marked = row[static_cast<size_t>(c_orig)];
    rec.edit_word = row[static_cast<size_t>(c_edit)];
    find_edit_span(rec.original_marked);  // reject malformed markers
    detail::fill_grades(rec, row, gcols, diags);
    records.push_back(std::move(rec));
  }
  return records;
}

// Expected gold label for a pair of mean grades.
inline int label_from_grades(double mean_a, double mean_b) {
  if (mean_a > mean_b) return 1;
  if (mean_b > mean_a) return 2;
  return 0;
}

// Parses a sub-task-2 file: columns id, original1, edit1, grades1, meanGrade1,
// original2, edit2, grades2, meanGrade2, label (grades/means/label optional).
inline std::vector<PairRecord> parse_task2_file(const std::string& path,
                                                DiagList* diags = nullptr) {
  const CsvTable t = read_csv_file(path);
  if (t.header.empty()) throw Error(Err::MissingColumn, "empty file " + path);
  const int c_id = detail::require_col(t, "id", path);
  const int c_orig1 = detail::require_col(t, "original1", path);
  const int c_edit1 = detail::require_col(t, "edit1", path);
  const int c_orig2 = detail::require_col(t, "original2", path);
  const int c_edit2 = detail::require_col(t, "edit2", path);
  const detail::GradeColumns g1{t.col("grades1"), t.col("meanGrade1")};
  const detail::GradeColumns g2{t.col("grades2"), t.col("meanGrade2")};
  const int c_label = t.col("label");

  std::vector<PairRecord> pairs;
  pairs.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    if (row.size() < t.header.size()) {
      throw Error(Err::MissingColumn,
                  "row with " + std::to_string(row.size()) + " fields (header has " +
                      std::to_string(t.header.size()) + ") in " + path);
    }
    PairRecord pair;
    pair.id = row[static_cast<size_t>(c_id)];
    pair.record_a.id = pair.id + "-a";
    pair.record_a.original_marked = row[static_cast<size_t>(c_orig1)];
    pair.record_a.edit_word = row[static_cast<size_t>(c_edit1)];
    pair.record_b.id = pair.id + "-b";
    pair.record_b.original_marked = row[static_cast<size_t>(c_orig2)];
    pair.record_b.edit_word = row[static_cast<size_t>(c_edit2)];
    const EditSpan span_a = find_edit_span(pair.record_a.original_marked);
    const EditSpan span_b = find_edit_span(pair.record_b.original_marked);
    (void)span_a;
    (void)span_b;
    if (strip_edit(pair.record_a.original_marked) != strip_edit(pair.record_b.original_marked)) {
      throw Error(Err::OriginalMismatch, "pair " + pair.id + ": originals differ");
    }
    detail::fill_grades(pair.record_a, row, g1, diags);
    detail::fill_grades(pair.record_b, row, g2, diags);
    if (c_label >= 0 && !trim(row[static_cast<size_t>(c_label)]).empty()) {
      const int label =
          static_cast<int>(detail::parse_real(row[static_cast<size_t>(c_label)], "label"));
      if (label < 0 || label > 2) {
        throw Error(Err::GradeOutOfRange, "pair " + pair.id + ": label " +
                                              std::to_string(label) + " outside {0,1,2}");
      }
      pair.gold_label = label;
      // Gold labels are preserved verbatim; contradictions with the grade
      // comparison are surfaced as warnings.
      if (pair.record_a.mean_grade && pair.record_b.mean_grade) {
        const int expected =
            label_from_grades(*pair.record_a.mean_grade, *pair.record_b.mean_grade);
        if (expected != label) {
          add_diag(diags, "ConsistencyWarning",
                   "pair " + pair.id + ": gold label " + std::to_string(label) +
                       " contradicts grade comparison (" + std::to_string(expected) + ")");
        }
      }
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Splits

struct SplitCounts {
  size_t train = 0;
  size_t dev = 0;
  size_t test = 0;
};

// Deterministic disjoint splits of exactly the requested sizes.
inline std::tuple<DatasetSplit, DatasetSplit, DatasetSplit> make_splits(
    const std::vector<HeadlineRecord>& records, SplitCounts counts, uint64_t seed,
    SourceDataset source = SourceDataset::funlines) {
  const size_t total = counts.train + counts.dev + counts.test;
  if (total > records.size()) {
    throw Error(Err::InsufficientRecords,
                "requested " + std::to_string(total) + " records, have " +
                    std::to_string(records.size()));
  }
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  auto take = [&](size_t offset, size_t n, SplitName name) {
    Split<HeadlineRecord> s;
    s.name = name;
    s.source = source;
    s.records.reserve(n);
    for (size_t i = 0; i < n; ++i) s.records.push_back(records[order[offset + i]]);
    return s;
  };
  return {take(0, counts.train, SplitName::train),
          take(counts.train, counts.dev, SplitName::dev),
          take(counts.train + counts.dev, counts.test, SplitName::test)};
}

// Record ids must be unique within a split and disjoint across splits of the
// same dataset/task.
template <typename RecordT>
inline void check_split_ids(const std::vector<const Split<RecordT>*>& splits) {
  std::unordered_set<std::string> seen;
  for (const auto* split : splits) {
    for (const auto& rec : split->records) {
      if (!seen.insert(rec.id).second) {
        throw Error(Err::DuplicateRecordId,
                    "record id '" + rec.id + "' appears more than once across splits");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Normalized record output (one JSON object per line)

inline nlohmann::json record_to_json(const HeadlineRecord& r) {
  nlohmann::json j;
  j["id"] = r.id;
  j["original"] = r.original_marked;
  j["edit"] = r.edit_word;
  if (r.annotator_grades) j["grades"] = *r.annotator_grades;
  if (r.mean_grade) j["mean_grade"] = *r.mean_grade;
  return j;
}

inline nlohmann::json record_to_json(const PairRecord& p) {
  nlohmann::json j;
  j["id"] = p.id;
  j["a"] = record_to_json(p.record_a);
  j["b"] = record_to_json(p.record_b);
  if (p.gold_label) j["label"] = *p.gold_label;
  return j;
}

template <typename RecordT>
inline void write_jsonl(std::ostream& out, const std::vector<RecordT>& records) {
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

// CSV writers for the same formats the parsers read (used by the split
// command and by tests round-tripping synthetic files).

inline std::string grades_to_string(const std::vector<int>& grades) {
  std::string s;
  for (int g : grades) s.push_back(static_cast<char>('0' + g));
  return s;
}

inline std::string format_mean(double mean) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", mean);
  return buf;
}

inline void write_task1_csv(std::ostream& out, const std::vector<HeadlineRecord>& records) {
  write_csv_row(out, {"id", "original", "edit", "grades", "meanGrade"});
  for (const auto& r : records) {
    write_csv_row(out, {r.id, r.original_marked, r.edit_word,
                        r.annotator_grades ? grades_to_string(*r.annotator_grades) : "",
                        r.mean_grade ? format_mean(*r.mean_grade) : ""});
  }
}

inline void write_task2_csv(std::ostream& out, const std::vector<PairRecord>& pairs) {
  write_csv_row(out, {"id", "original1", "edit1", "grades1", "meanGrade1", "original2", "edit2",
                      "grades2", "meanGrade2", "label"});
  for (const auto& p : pairs) {
    write_csv_row(out,
                  {p.id, p.record_a.original_marked, p.record_a.edit_word,
                   p.record_a.annotator_grades ? grades_to_string(*p.record_a.annotator_grades) : "",
                   p.record_a.mean_grade ? format_mean(*p.record_a.mean_grade) : "",
                   p.record_b.original_marked, p.record_b.edit_word,
                   p.record_b.annotator_grades ? grades_to_string(*p.record_b.annotator_grades) : "",
                   p.record_b.mean_grade ? format_mean(*p.record_b.mean_grade) : "",
                   p.gold_label ? std::to_string(*p.gold_label) : ""});
  }
}

}  // namespace hgrade
