#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>
#include <sstream>

#include "hgrade/corpus.hpp"
#include "test_util.hpp"

using namespace hgrade;

namespace {
const char* kSuite = "corpus";

std::vector<HeadlineRecord> synthetic_records(size_t n) {
  std::vector<HeadlineRecord> records;
  records.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    HeadlineRecord r;
    r.id = "r" + std::to_string(i);
    r.original_marked = "headline number <word" + std::to_string(i) + "/> here";
    r.edit_word = "edit" + std::to_string(i);
    r.annotator_grades = std::vector<int>{static_cast<int>(i % 4)};
    r.mean_grade = static_cast<double>(i % 4);
    records.push_back(std::move(r));
  }
  return records;
}

// Token-level diff oracle for single-word edits: the two strings must have
// the same word count and differ at exactly one position.
bool single_word_replacement(const std::string& a, const std::string& b) {
  std::istringstream sa(a), sb(b);
  std::vector<std::string> wa, wb;
  for (std::string w; sa >> w;) wa.push_back(w);
  for (std::string w; sb >> w;) wb.push_back(w);
  if (wa.size() != wb.size()) return false;
  size_t differing = 0;
  for (size_t i = 0; i < wa.size(); ++i) {
    if (wa[i] != wb[i]) ++differing;
  }
  return differing == 1;
}

}  // namespace

TEST_CASE("apply_edit reproduces the tequila headline exactly") {
  const std::string marked =
      "US Navy ship fired <warning/> shots at an Iranian boat in the Persian Gulf";
  CHECK(apply_edit(marked, "tequila") ==
        "US Navy ship fired tequila shots at an Iranian boat in the Persian Gulf");
  CHECK(strip_edit(marked) ==
        "US Navy ship fired warning shots at an Iranian boat in the Persian Gulf");
}

TEST_CASE("apply_edit trivial spans") {
  CHECK(apply_edit("A <B/> C", "B") == "A B C");
  CHECK(apply_edit("<X/> rest", "Start") == "Start rest");
  CHECK(strip_edit("A <B/> C") == "A B C");
  CHECK(strip_edit("<X/>") == "X");
}

TEST_CASE("apply_edit keeps surrounding whitespace untouched") {
  CHECK(apply_edit("a  <b/>   c", "zz") == "a  zz   c");
}

TEST_CASE("apply_edit_spanned reports the replacement span") {
  CharSpan span;
  const std::string out = apply_edit_spanned("fired <warning/> shots", "tequila", &span);
  CHECK(out == "fired tequila shots");
  CHECK(out.substr(static_cast<size_t>(span.begin),
                   static_cast<size_t>(span.end - span.begin)) == "tequila");
}

TEST_CASE("strip_edit reports the kept span") {
  CharSpan span;
  const std::string out = strip_edit("fired <warning/> shots", &span);
  CHECK(out.substr(static_cast<size_t>(span.begin),
                   static_cast<size_t>(span.end - span.begin)) == "warning");
}

TEST_CASE("malformed edit markers are rejected") {
  CHECK_THROWS_MATCHES(find_edit_span("no markers here"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::MalformedEditMarker;
                       }));
  CHECK_THROWS_AS(find_edit_span("two <a/> markers <b/>"), Error);
  CHECK_THROWS_AS(find_edit_span("unterminated <a marker"), Error);
  CHECK_THROWS_AS(find_edit_span("nested <a <b/> marker"), Error);
}

TEST_CASE("round trip: apply vs strip differ in one contiguous replacement") {
  const std::vector<std::string> marked = {
      "US Navy ship fired <warning/> shots at an Iranian boat in the Persian Gulf",
      "<leader/> speaks at the rally",
      "the committee issued a <statement/>",
  };
  for (const auto& m : marked) {
    CHECK(single_word_replacement(strip_edit(m), apply_edit(m, "pickle")));
  }
}

TEST_CASE("task1 parsing: golden rows") {
  const auto path = testutil::write_file(
      kSuite, "task1.csv",
      "id,original,edit,grades,meanGrade\n"
      "1,\"US Navy ship fired <warning/> shots\",tequila,33322,2.6\n"
      "2,<X/> rest,start,00000,0\n");
  DiagList diags;
  const auto records = parse_task1_file(path.string(), &diags);
  REQUIRE(records.size() == 2);
  CHECK(records[0].id == "1");
  CHECK(records[0].edit_word == "tequila");
  REQUIRE(records[0].annotator_grades.has_value());
  CHECK(*records[0].annotator_grades == std::vector<int>{3, 3, 3, 2, 2});
  CHECK(*records[0].mean_grade == Catch::Approx(2.6).epsilon(1e-12));
  CHECK(diags.empty());
}

TEST_CASE("task1 parsing: header only yields empty list") {
  const auto path =
      testutil::write_file(kSuite, "empty.csv", "id,original,edit,grades,meanGrade\n");
  CHECK(parse_task1_file(path.string()).empty());
}

TEST_CASE("task1 parsing: blind files have no grades") {
  const auto path = testutil::write_file(kSuite, "blind.csv",
                                         "id,original,edit\n"
                                         "9,a <b/> c,word\n");
  const auto records = parse_task1_file(path.string());
  REQUIRE(records.size() == 1);
  CHECK(records[0].blind());
  CHECK_FALSE(records[0].mean_grade.has_value());
}

TEST_CASE("task1 parsing: missing required column") {
  const auto path = testutil::write_file(kSuite, "nocol.csv", "id,original\n1,a <b/> c\n");
  CHECK_THROWS_MATCHES(parse_task1_file(path.string()), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::MissingColumn;
                       }));
}

TEST_CASE("task1 parsing: malformed marker row is rejected, not skipped") {
  const auto path = testutil::write_file(kSuite, "badmark.csv",
                                         "id,original,edit,grades,meanGrade\n"
                                         "1,no marker at all,word,3,3\n");
  CHECK_THROWS_MATCHES(parse_task1_file(path.string()), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::MalformedEditMarker;
                       }));
}

TEST_CASE("task1 parsing: out-of-range grade digit") {
  const auto path = testutil::write_file(kSuite, "badgrade.csv",
                                         "id,original,edit,grades,meanGrade\n"
                                         "1,a <b/> c,word,37,2\n");
  CHECK_THROWS_MATCHES(parse_task1_file(path.string()), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::GradeOutOfRange;
                       }));
}

TEST_CASE("task1 parsing: mean mismatch warns and recomputed mean wins") {
  const auto path = testutil::write_file(kSuite, "meanmismatch.csv",
                                         "id,original,edit,grades,meanGrade\n"
                                         "1,a <b/> c,word,33,1.0\n");
  DiagList diags;
  const auto records = parse_task1_file(path.string(), &diags);
  REQUIRE(records.size() == 1);
  CHECK(*records[0].mean_grade == Catch::Approx(3.0));
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].category == "MeanMismatch");
}

TEST_CASE("task1 parsing: missing input file") {
  CHECK_THROWS_MATCHES(parse_task1_file("/nonexistent/nowhere.csv"), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::InputMissing;
                       }));
}

TEST_CASE("parse determinism: same bytes, identical records") {
  const auto path = testutil::write_file(
      kSuite, "det.csv",
      "id,original,edit,grades,meanGrade\n"
      "1,\"quoted, <comma/> field\",word,321,2.0\n"
      "2,plain <x/> row,other,111,1.0\n");
  const auto a = parse_task1_file(path.string());
  const auto b = parse_task1_file(path.string());
  CHECK(a == b);
}

TEST_CASE("task1 round trip through the writer") {
  const auto records = synthetic_records(7);
  std::ostringstream out;
  write_task1_csv(out, records);
  const auto path = testutil::write_file(kSuite, "roundtrip.csv", out.str());
  const auto parsed = parse_task1_file(path.string());
  CHECK(parsed == records);
}

TEST_CASE("task2 parsing: golden pair with consistency warning") {
  const auto path = testutil::write_file(
      kSuite, "task2.csv",
      "id,original1,edit1,grades1,meanGrade1,original2,edit2,grades2,meanGrade2,label\n"
      "7,a <b/> c,funny,33332,2.8,a <b/> c,dull,00001,0.2,1\n"
      "8,x <y/> z,one,22,2.0,x <y/> z,two,11,1.0,2\n");
  DiagList diags;
  const auto pairs = parse_task2_file(path.string(), &diags);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].id == "7");
  CHECK(pairs[0].record_a.id == "7-a");
  CHECK(pairs[0].record_b.id == "7-b");
  CHECK(*pairs[0].gold_label == 1);
  // pair 8 contradicts its grades (2.0 > 1.0 should be label 1); the label is
  // preserved verbatim and a warning is recorded
  CHECK(*pairs[1].gold_label == 2);
  REQUIRE(diags.size() == 1);
  CHECK(diags[0].category == "ConsistencyWarning");
}

TEST_CASE("task2 parsing: mismatched originals") {
  const auto path = testutil::write_file(
      kSuite, "task2bad.csv",
      "id,original1,edit1,grades1,meanGrade1,original2,edit2,grades2,meanGrade2,label\n"
      "1,a <b/> c,w1,3,3,a <b/> d,w2,0,0,1\n");
  CHECK_THROWS_MATCHES(parse_task2_file(path.string()), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::OriginalMismatch;
                       }));
}

TEST_CASE("task2 round trip through the writer") {
  const auto t1 = synthetic_records(4);
  std::vector<PairRecord> pairs;
  for (size_t i = 0; i + 1 < t1.size(); i += 2) {
    PairRecord p;
    p.id = "p" + std::to_string(i);
    p.record_a = t1[i];
    p.record_b = t1[i];
    p.record_a.id = p.id + "-a";
    p.record_b.id = p.id + "-b";
    p.record_b.edit_word = "different";
    p.gold_label = label_from_grades(*p.record_a.mean_grade, *p.record_b.mean_grade);
    pairs.push_back(std::move(p));
  }
  std::ostringstream out;
  write_task2_csv(out, pairs);
  const auto path = testutil::write_file(kSuite, "task2rt.csv", out.str());
  const auto parsed = parse_task2_file(path.string());
  CHECK(parsed == pairs);
}

TEST_CASE("label_from_grades comparison") {
  CHECK(label_from_grades(2.6, 1.8) == 1);
  CHECK(label_from_grades(1.8, 2.6) == 2);
  CHECK(label_from_grades(1.0, 1.0) == 0);
}

TEST_CASE("make_splits: exact sizes, disjoint, deterministic") {
  const auto records = synthetic_records(100);
  const auto [train, dev, test] = make_splits(records, {70, 20, 10}, 42);
  CHECK(train.records.size() == 70);
  CHECK(dev.records.size() == 20);
  CHECK(test.records.size() == 10);
  CHECK(train.name == SplitName::train);

  std::set<std::string> ids;
  for (const auto* split : {&train, &dev, &test}) {
    for (const auto& r : split->records) CHECK(ids.insert(r.id).second);
  }
  CHECK(ids.size() == 100);

  const auto [train2, dev2, test2] = make_splits(records, {70, 20, 10}, 42);
  CHECK(train.records == train2.records);
  CHECK(dev.records == dev2.records);
  CHECK(test.records == test2.records);

  const auto [train3, dev3, test3] = make_splits(records, {70, 20, 10}, 43);
  CHECK(train.records != train3.records);  // different seed, different membership
  (void)dev3;
  (void)test3;
}

TEST_CASE("make_splits: all records in train") {
  const auto records = synthetic_records(10);
  const auto [train, dev, test] = make_splits(records, {10, 0, 0}, 1);
  CHECK(train.records.size() == 10);
  CHECK(dev.records.empty());
  CHECK(test.records.empty());
}

TEST_CASE("make_splits: insufficient records") {
  const auto records = synthetic_records(5);
  CHECK_THROWS_MATCHES(make_splits(records, {5, 1, 0}, 1), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.category() == Err::InsufficientRecords;
                       }));
}

TEST_CASE("funlines-sized splits come out exact for any seed") {
  const auto records = synthetic_records(8248);
  for (uint64_t seed : {kDefaultSplitSeed, uint64_t{7}, uint64_t{123}}) {
    const auto [train, dev, test] = make_splits(records, {5274, 1322, 1652}, seed);
    CHECK(train.records.size() == 5274);
    CHECK(dev.records.size() == 1322);
    CHECK(test.records.size() == 1652);
  }
}

TEST_CASE("duplicate ids across splits are rejected") {
  DatasetSplit a{SplitName::train, SourceDataset::funlines, synthetic_records(3)};
  DatasetSplit b{SplitName::dev, SourceDataset::funlines, synthetic_records(2)};
  CHECK_THROWS_MATCHES(
      check_split_ids<HeadlineRecord>({&a, &b}), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.category() == Err::DuplicateRecordId; }));
}

TEST_CASE("jsonl output is one object per line") {
  const auto records = synthetic_records(3);
  std::ostringstream out;
  write_jsonl(out, records);
  std::istringstream in(out.str());
  std::string line;
  size_t lines = 0;
  while (std::getline(in, line)) {
    CHECK(line.front() == '{');
    CHECK(line.back() == '}');
    ++lines;
  }
  CHECK(lines == 3);
}
