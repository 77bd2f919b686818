#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hgrade/corpus.hpp"
#include "hgrade/rng.hpp"

namespace hgrade {

// Planted-signal synthetic corpus: the humor grade is a deterministic
// function of the replacement word (3.0 for "funny" words, 0.0 otherwise), so
// a working grader must recover it and a constant baseline cannot.

inline const std::vector<std::string>& planted_funny_words() {
  static const std::vector<std::string> words = {
      "tequila", "pancake", "walrus",  "kazoo",   "noodle", "pajamas", "llama",
      "pickle",  "yodel",   "bubble",  "wombat",  "banjo",  "gnome",   "waffle",
      "disco",   "burrito", "unicorn", "pinata",
  };
  return words;
}

inline const std::vector<std::string>& planted_plain_words() {
  static const std::vector<std::string> words = {
      "policy",  "reform",  "budget",  "report",  "summit",  "strategy", "measure",
      "program", "meeting", "review",  "deal",    "plan",    "vote",     "bill",
      "inquiry", "statute", "hearing", "pact",
  };
  return words;
}

namespace detail {

struct PlantedTemplate {
  const char* prefix;
  const char* original;  // word inside the edit marker
  const char* suffix;
};

inline const std::vector<PlantedTemplate>& planted_templates() {
  static const std::vector<PlantedTemplate> templates = {
      {"government announces new ", "policy", " for the coming year"},
      {"senate delays the ", "vote", " after long debate"},
      {"city council approves ", "budget", " despite objections"},
      {"scientists publish ", "report", " on climate trends"},
      {"president defends ", "strategy", " in televised address"},
      {"ministers gather for ", "summit", " amid tensions"},
      {"committee opens ", "inquiry", " into spending"},
      {"court reviews the ", "statute", " next month"},
      {"union leaders reject ", "deal", " over wages"},
      {"agency unveils ", "program", " to cut emissions"},
      {"lawmakers debate the ", "bill", " late into the night"},
      {"officials schedule ", "hearing", " on the merger"},
  };
  return templates;
}

}  // namespace detail

struct PlantedData {
  std::vector<HeadlineRecord> records;  // two edits per base headline
  std::vector<PairRecord> pairs;        // one pair per base headline
};

// num_records must be even: records come in pairs sharing one base headline
// with two distinct replacement words.
inline PlantedData make_planted_data(size_t num_records, uint64_t seed) {
  if (num_records % 2 != 0) {
    throw Error(Err::ConfigInvalid, "planted dataset size must be even");
  }
  const auto& funny = planted_funny_words();
  const auto& plain = planted_plain_words();
  const auto& templates = detail::planted_templates();
  Rng rng(seed);
  PlantedData data;
  data.records.reserve(num_records);
  data.pairs.reserve(num_records / 2);

  auto pick_word = [&](bool is_funny) -> const std::string& {
    const auto& pool = is_funny ? funny : plain;
    return pool[static_cast<size_t>(rng.below(pool.size()))];
  };

  for (size_t base = 0; base < num_records / 2; ++base) {
    const auto& tpl = templates[static_cast<size_t>(rng.below(templates.size()))];
    const std::string marked =
        std::string(tpl.prefix) + "<" + tpl.original + "/>" + tpl.suffix;
    const std::string base_id = "syn-" + std::to_string(base);

    auto make_record = [&](const char* suffix, bool is_funny,
                           const std::string& word) -> HeadlineRecord {
      HeadlineRecord r;
      r.id = base_id + suffix;
      r.original_marked = marked;
      r.edit_word = word;
      const int g = is_funny ? 3 : 0;
      r.annotator_grades = std::vector<int>{g, g, g};
      r.mean_grade = static_cast<double>(g);
      return r;
    };

    const bool funny_a = rng.bernoulli(0.5);
    const bool funny_b = rng.bernoulli(0.5);
    std::string word_a = pick_word(funny_a);
    std::string word_b = pick_word(funny_b);
    while (word_b == word_a) word_b = pick_word(funny_b);

    HeadlineRecord a = make_record("-a", funny_a, word_a);
    HeadlineRecord b = make_record("-b", funny_b, word_b);

    PairRecord pair;
    pair.id = base_id;
    pair.record_a = a;
    pair.record_b = b;
    pair.gold_label = label_from_grades(*a.mean_grade, *b.mean_grade);
    data.pairs.push_back(std::move(pair));
    data.records.push_back(std::move(a));
    data.records.push_back(std::move(b));
  }
  return data;
}

// RMSE of the constant predictor at the dataset mean — the baseline a real
// grader has to beat.
inline double constant_mean_baseline_rmse(const std::vector<HeadlineRecord>& records) {
  if (records.empty()) throw Error(Err::EmptyInput, "no records");
  double mean = 0.0;
  for (const auto& r : records) {
    if (!r.mean_grade) throw Error(Err::MissingGrades, "record " + r.id + " has no grade");
    mean += *r.mean_grade;
  }
  mean /= static_cast<double>(records.size());
  double sq = 0.0;
  for (const auto& r : records) {
    const double d = *r.mean_grade - mean;
    sq += d * d;
  }
  return std::sqrt(sq / static_cast<double>(records.size()));
}

}  // namespace hgrade
