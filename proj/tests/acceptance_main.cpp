// Acceptance gate for the headline humor-grading toolkit.
//
// Prints one [PASS]/[FAIL]/[SKIP] line per numbered criterion; [INFO] lines
// carry details for the soft directional criterion. Exit status is zero iff
// nothing failed. Criteria 1-7 are self-contained (tiny backend, synthetic
// data, CPU minutes). Criteria 8-9 need the official datasets and converted
// pretrained weights and are skipped with a reason when those are absent.
//
// Extended asset layout:
//   $HGRADE_DATA_HUMICROEDIT/task1/{train,dev,test}.csv
//   $HGRADE_DATA_HUMICROEDIT/task2/{train,dev,test}.csv
//   $HGRADE_DATA_FUNLINES/task1.csv   (whole corpus; splits are made here)
//   $HGRADE_DATA_FUNLINES/task2.csv
//   $HGRADE_CACHE/bert_base_uncased/  (converted checkpoint + vocabulary)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hgrade/hgrade.hpp"

namespace fs = std::filesystem;
using namespace hgrade;

namespace {

int g_failures = 0;

void pass(int n, const std::string& what) { std::printf("[PASS] %d %s\n", n, what.c_str()); }
void fail(int n, const std::string& what) {
  std::printf("[FAIL] %d %s\n", n, what.c_str());
  ++g_failures;
}
void skip(int n, const std::string& why) { std::printf("[SKIP] %d %s\n", n, why.c_str()); }
void info(const std::string& what) { std::printf("[INFO] %s\n", what.c_str()); }

std::string fmt(const char* pattern, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), pattern, a, b);
  return buf;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "hgrade-acceptance";
  fs::create_directories(dir);
  return dir;
}

fs::path write_scratch(const std::string& name, const std::string& content) {
  const fs::path p = scratch() / name;
  std::ofstream out(p, std::ios::binary);
  out << content;
  return p;
}

// Wraps a criterion so an unexpected exception reads as a failure, not a crash.
void run_criterion(int n, const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    fail(n, name + " raised: " + e.what());
  }
}

// ---------------------------------------------------------------------------
// 1. Parser goldens and the documented edit example.

void criterion_1() {
  const std::string name = "parser goldens and the documented edit example";

  const fs::path t1 = write_scratch(
      "golden_task1.csv",
      "id,original,edit,grades,meanGrade\n"
      "1,\"US Navy ship fired <warning/> shots at an Iranian boat in the Persian "
      "Gulf\",tequila,33322,2.6\n"
      "2,Mayor unveils <budget/> plan for next year,pinata,10000,0.2\n");
  const std::vector<HeadlineRecord> records = parse_task1_file(t1.string());
  if (records.size() != 2) return fail(1, name + " (record count)");

  const std::string edited = apply_edit(records[0].original_marked, records[0].edit_word);
  if (edited != "US Navy ship fired tequila shots at an Iranian boat in the Persian Gulf") {
    return fail(1, name + " (edit example mismatch: \"" + edited + "\")");
  }
  if (!records[0].annotator_grades ||
      *records[0].annotator_grades != std::vector<int>{3, 3, 3, 2, 2} ||
      !records[0].mean_grade || std::abs(*records[0].mean_grade - 2.6) > 1e-12) {
    return fail(1, name + " (grade parsing)");
  }

  // writer -> parser round trip, sub-task 1
  std::ostringstream rw;
  write_task1_csv(rw, records);
  const fs::path t1b = write_scratch("roundtrip_task1.csv", rw.str());
  if (parse_task1_file(t1b.string()) != records) {
    return fail(1, name + " (task-1 round trip)");
  }

  // writer -> parser round trip, sub-task 2 (two edits of the same headline)
  PairRecord pair;
  pair.id = "7";
  pair.record_a = records[0];
  pair.record_a.id = "7-a";
  pair.record_b = records[0];
  pair.record_b.id = "7-b";
  pair.record_b.edit_word = "karaoke";
  pair.record_b.annotator_grades = std::vector<int>{1, 0, 0, 0, 0};
  pair.record_b.mean_grade = 0.2;
  pair.gold_label = label_from_grades(*pair.record_a.mean_grade, *pair.record_b.mean_grade);
  std::ostringstream pw;
  write_task2_csv(pw, {pair});
  const fs::path t2 = write_scratch("roundtrip_task2.csv", pw.str());
  if (parse_task2_file(t2.string()) != std::vector<PairRecord>{pair}) {
    return fail(1, name + " (task-2 round trip)");
  }
  pass(1, name);
}

// ---------------------------------------------------------------------------
// 2. Metric oracle equivalence at 1e-12 on 100 random instances each.

void criterion_2() {
  const std::string name = "metric oracle equivalence (1e-12, 100 instances each)";
  Rng rng(902);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.below(200);
    std::vector<double> pred(n), truth(n);
    std::vector<int> plab(n), glab(n);
    for (size_t i = 0; i < n; ++i) {
      pred[i] = 3.0 * rng.uniform();
      truth[i] = 3.0 * rng.uniform();
      plab[i] = static_cast<int>(rng.below(3));
      glab[i] = static_cast<int>(rng.below(3));
    }
    // independent brute-force references
    double sq = 0.0;
    for (size_t i = 0; i < n; ++i) sq += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    const double ref_rmse = std::sqrt(sq / static_cast<double>(n));
    size_t hits = 0;
    for (size_t i = 0; i < n; ++i) hits += plab[i] == glab[i] ? 1 : 0;
    const double ref_acc = static_cast<double>(hits) / static_cast<double>(n);

    worst = std::max(worst, std::abs(rmse(pred, truth) - ref_rmse));
    worst = std::max(worst, std::abs(categorical_accuracy(plab, glab) - ref_acc));
  }
  if (worst > 1e-12) return fail(2, name + fmt(" (worst deviation %.3g)", worst));
  pass(2, name);
}

// ---------------------------------------------------------------------------
// 3. Masking statistics: target fraction and corruption containment.

void criterion_3() {
  const std::string name = "masking statistics (fraction in [0.145,0.155], corruption contained)";
  Rng rng(903);
  const SpecialTokenIds specials = family_defaults(Family::tiny).specials;
  size_t eligible = 0, targeted = 0, stray = 0;
  while (eligible < 120000) {
    std::vector<int> ids;
    ids.push_back(specials.cls);
    const size_t content = 20 + rng.below(40);
    for (size_t i = 0; i < content; ++i) ids.push_back(10 + static_cast<int>(rng.below(900)));
    ids.push_back(specials.sep);
    const MaskingPlan plan = build_masking_plan(ids, 0.15, {}, rng, specials, 1000);
    eligible += content;
    targeted += plan.target_positions.size();
    for (const auto& [pos, id] : plan.corrupted_ids) {
      (void)id;
      bool in_targets = false;
      for (int t : plan.target_positions) in_targets |= t == pos;
      if (!in_targets) ++stray;
    }
    // special positions must never be targeted
    for (int t : plan.target_positions) {
      if (t == 0 || t == static_cast<int>(ids.size()) - 1) ++stray;
    }
  }
  const double fraction = static_cast<double>(targeted) / static_cast<double>(eligible);
  if (stray != 0) return fail(3, name + " (corruption outside target set)");
  if (fraction < 0.145 || fraction > 0.155) {
    return fail(3, name + fmt(" (fraction %.4f)", fraction));
  }
  pass(3, name + fmt(" (fraction %.4f over %.0f positions)", fraction,
                     static_cast<double>(eligible)));
}

// ---------------------------------------------------------------------------
// 4. Pairwise consistency through the real zero-shot pipeline.

void criterion_4() {
  const std::string name = "pairwise consistency (1000 pairs, labels from grades, antisymmetry)";

  // pure-function antisymmetry on random grade pairs
  Rng rng(904);
  for (int i = 0; i < 1000; ++i) {
    const double a = 3.0 * rng.uniform();
    const double b = rng.bernoulli(0.1) ? a : 3.0 * rng.uniform();
    const int fw = pair_label(a, b);
    const int bw = pair_label(b, a);
    const int want = fw == 1 ? 2 : (fw == 2 ? 1 : 0);
    if (bw != want) return fail(4, name + " (pair_label antisymmetry)");
  }

  // pipeline: emitted labels must equal pair_label of the emitted grades
  const PlantedData data = make_planted_data(2000, 904);  // 1000 pairs
  std::vector<std::string> texts;
  for (const auto& r : data.records) {
    texts.push_back(strip_edit(r.original_marked));
    texts.push_back(apply_edit(r.original_marked, r.edit_word));
  }
  BackendSpec spec = family_defaults(Family::tiny);
  spec.num_layers = 1;
  spec.num_heads = 2;
  spec.hidden_size = 16;
  spec.intermediate_size = 32;
  spec.embedding_size = 16;
  const GraderModel model(make_tiny_backend(build_whitespace_vocab(texts, 1), 904, spec), 904);

  const std::vector<PairPrediction> preds = predict_pairs(model, data.pairs);
  if (preds.size() != data.pairs.size()) return fail(4, name + " (prediction count)");
  for (const auto& p : preds) {
    const double ga = std::strtod(p.grade_a_str.c_str(), nullptr);
    const double gb = std::strtod(p.grade_b_str.c_str(), nullptr);
    if (p.label != pair_label(ga, gb)) {
      return fail(4, name + " (label disagrees with emitted grades for " + p.pair_id + ")");
    }
  }

  // operand swap through the pipeline: grades exchange, labels mirror
  std::vector<PairRecord> swapped = data.pairs;
  for (auto& p : swapped) std::swap(p.record_a, p.record_b);
  const std::vector<PairPrediction> back = predict_pairs(model, swapped);
  for (size_t i = 0; i < preds.size(); ++i) {
    const int want = preds[i].label == 1 ? 2 : (preds[i].label == 2 ? 1 : 0);
    if (back[i].label != want || back[i].grade_a_str != preds[i].grade_b_str ||
        back[i].grade_b_str != preds[i].grade_a_str) {
      return fail(4, name + " (swap antisymmetry for " + preds[i].pair_id + ")");
    }
  }
  pass(4, name);
}

// ---------------------------------------------------------------------------
// 5. Tiny end-to-end on the planted-signal dataset.

struct TinyRun {
  std::unique_ptr<GraderModel> model;
  std::vector<HeadlineRecord> test_records;
};

TinyRun criterion_5() {
  const std::string name = "tiny end-to-end (dev RMSE < 0.5 x baseline, pair accuracy > 0.8)";
  const auto t0 = std::chrono::steady_clock::now();
  TinyRun run;

  const PlantedData data = make_planted_data(500, 905);
  const std::vector<HeadlineRecord> train(data.records.begin(), data.records.begin() + 350);
  const std::vector<HeadlineRecord> dev(data.records.begin() + 350, data.records.begin() + 425);
  run.test_records.assign(data.records.begin() + 425, data.records.end());

  std::vector<std::string> texts;
  for (const auto& r : data.records) {
    texts.push_back(strip_edit(r.original_marked));
    texts.push_back(apply_edit(r.original_marked, r.edit_word));
  }
  run.model = std::make_unique<GraderModel>(
      make_tiny_backend(build_whitespace_vocab(texts, 1), 905), 905);
  run.model->set_train_dataset(SourceDataset::humicroedit);

  GraderTrainConfig config;
  config.epochs = 10;
  config.batch = 16;
  config.learn_rate = 2e-3;
  config.seed = 905;
  config.early_stop_patience = 10;  // let the full 10-epoch budget run
  const GraderTrainLog log =
      train_grader(*run.model, DatasetSplit{SplitName::train, SourceDataset::humicroedit, train},
                   DatasetSplit{SplitName::dev, SourceDataset::humicroedit, dev}, config);

  const double dev_rmse = std::sqrt(log.best_dev_mse);
  const double baseline = constant_mean_baseline_rmse(dev);

  // derived pairs fully inside the held-out test block: records 426..499
  std::vector<PairRecord> test_pairs(data.pairs.begin() + 213, data.pairs.end());
  const std::vector<PairPrediction> preds = predict_pairs(*run.model, test_pairs);
  size_t non_tie = 0, hits = 0;
  for (size_t i = 0; i < test_pairs.size(); ++i) {
    if (!test_pairs[i].gold_label || *test_pairs[i].gold_label == 0) continue;
    ++non_tie;
    hits += preds[i].label == *test_pairs[i].gold_label ? 1 : 0;
  }
  const double acc =
      non_tie == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(non_tie);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string detail =
      fmt(" (dev RMSE %.4f vs 0.5x baseline %.4f", dev_rmse, 0.5 * baseline) +
      fmt(", pair accuracy %.4f on %.0f non-tie pairs", acc, static_cast<double>(non_tie)) +
      fmt(", %.1f s)", seconds);
  if (dev_rmse < 0.5 * baseline && acc > 0.8 && seconds < 300.0) {
    pass(5, name + detail);
  } else {
    fail(5, name + detail);
  }
  return run;
}

// ---------------------------------------------------------------------------
// 6. Attention properties: row sums, share oracle, gradient check.

void criterion_6() {
  const std::string name = "attention properties (row sums, share oracle, gradient check)";

  const PlantedData data = make_planted_data(8, 906);
  std::vector<std::string> texts;
  for (const auto& r : data.records) {
    texts.push_back(strip_edit(r.original_marked));
    texts.push_back(apply_edit(r.original_marked, r.edit_word));
  }
  const Vocab vocab = build_whitespace_vocab(texts, 1);

  // row sums on a full-size tiny forward
  EncoderBackend rows_backend = make_tiny_backend(vocab, 906);
  const EncodedPair ep = encode_record_strict(rows_backend, data.records.front());
  const ForwardCache cache = rows_backend.forward(ep.input());
  const auto n = static_cast<Eigen::Index>(ep.input().size());
  for (const auto& layer : cache.layers) {
    for (const Mat& head : layer.attn) {
      for (Eigen::Index q = 0; q < n; ++q) {
        if (std::abs(head.row(q).sum() - 1.0) > 1e-4) {
          return fail(6, name + " (attention row sum)");
        }
      }
    }
  }

  // share vs an independent brute-force loop at 1e-9
  const std::vector<int> non_special = ep.enc.non_special_indices();
  for (const auto& layer : cache.layers) {
    for (const Mat& head : layer.attn) {
      const Vec row = head.row(0).transpose();
      double num = 0.0, denom = 0.0;
      for (int p : non_special) denom += row(p);
      for (int p : ep.edited_token_positions) num += row(p);
      const double want = num / denom;
      const double got = edited_attention_share(row, ep.edited_token_positions, non_special);
      if (std::abs(got - want) > 1e-9) return fail(6, name + " (share oracle)");
    }
  }

  // gradient check at relative error 1e-3 (two sampled entries per tensor)
  BackendSpec gspec = family_defaults(Family::tiny);
  gspec.num_layers = 2;
  gspec.num_heads = 2;
  gspec.hidden_size = 16;
  gspec.intermediate_size = 32;
  gspec.embedding_size = 16;
  EncoderBackend backend = make_tiny_backend(vocab, 907, gspec);
  const PairEncoding enc =
      backend.tokenize(strip_edit(data.records[1].original_marked),
                       apply_edit(data.records[1].original_marked, data.records[1].edit_word));
  Rng dir_rng(908);
  Vec direction(gspec.hidden_size);
  for (int i = 0; i < gspec.hidden_size; ++i) direction(i) = dir_rng.gaussian();
  auto loss = [&]() { return direction.dot(backend.forward(enc.input).pooled); };

  backend.params().zero_grads();
  {
    ForwardCache c = backend.forward(enc.input);
    backend.backward(c, &direction, nullptr);
  }
  Rng pick(909);
  const double h = 1e-5;
  for (const auto& p : backend.params().items()) {
    for (int k = 0; k < 2; ++k) {
      const auto idx =
          static_cast<Eigen::Index>(pick.below(static_cast<uint64_t>(p->w.size())));
      const double saved = p->w.data()[idx];
      p->w.data()[idx] = saved + h;
      const double lp = loss();
      p->w.data()[idx] = saved - h;
      const double lm = loss();
      p->w.data()[idx] = saved;
      const double numeric = (lp - lm) / (2 * h);
      const double analytic = p->g.data()[idx];
      const double rel =
          std::abs(analytic - numeric) / std::max(1e-8, std::abs(analytic) + std::abs(numeric));
      if (std::abs(analytic - numeric) >= 1e-7 && rel >= 1e-3) {
        return fail(6, name + " (gradient mismatch in " + p->name +
                           fmt(": analytic %.6g numeric %.6g)", analytic, numeric));
      }
    }
  }
  pass(6, name);
}

// ---------------------------------------------------------------------------
// 7. Split determinism at the published FunLines sizes.

void criterion_7() {
  const std::string name = "split determinism (5274/1322/1652, stable membership)";
  std::vector<HeadlineRecord> records(8248);
  for (size_t i = 0; i < records.size(); ++i) {
    records[i].id = "fl-" + std::to_string(i);
    records[i].original_marked = "headline <word/> number " + std::to_string(i);
    records[i].edit_word = "token";
    records[i].mean_grade = 1.0;
  }
  const SplitCounts counts{5274, 1322, 1652};
  const auto [train1, dev1, test1] = make_splits(records, counts, kDefaultSplitSeed);
  if (train1.records.size() != 5274 || dev1.records.size() != 1322 ||
      test1.records.size() != 1652) {
    return fail(7, name + " (sizes)");
  }
  const auto [train2, dev2, test2] = make_splits(records, counts, kDefaultSplitSeed);
  if (train1.records != train2.records || dev1.records != dev2.records ||
      test1.records != test2.records) {
    return fail(7, name + " (membership changed across reruns)");
  }
  check_split_ids<HeadlineRecord>({&train1, &dev1, &test1});  // throws on overlap
  pass(7, name);
}

// ---------------------------------------------------------------------------
// 8. Official ingest counts (extended; needs the real datasets).

void criterion_8() {
  const std::string name = "official ingest counts";
  const char* hum = std::getenv("HGRADE_DATA_HUMICROEDIT");
  const char* fun = std::getenv("HGRADE_DATA_FUNLINES");
  if (!hum || !fun) {
    return skip(8, name +
                       " — official datasets not present (set HGRADE_DATA_HUMICROEDIT and "
                       "HGRADE_DATA_FUNLINES)");
  }
  const fs::path hroot(hum), froot(fun);
  const struct {
    fs::path path;
    size_t want;
    int task;
  } files[] = {
      {hroot / "task1" / "train.csv", 9652, 1}, {hroot / "task1" / "dev.csv", 2419, 1},
      {hroot / "task1" / "test.csv", 3024, 1},  {hroot / "task2" / "train.csv", 9381, 2},
      {hroot / "task2" / "dev.csv", 2355, 2},   {hroot / "task2" / "test.csv", 2960, 2},
      {froot / "task2.csv", 1958, 2},
  };
  for (const auto& f : files) {
    const size_t got = f.task == 1 ? parse_task1_file(f.path.string()).size()
                                   : parse_task2_file(f.path.string()).size();
    if (got != f.want) {
      return fail(8, name + " (" + f.path.string() + ": " + std::to_string(got) + " vs " +
                         std::to_string(f.want) + ")");
    }
  }
  pass(8, name);
}

// ---------------------------------------------------------------------------
// 9. Pretrained BERT reference run (extended; needs converted weights).

void criterion_9() {
  const std::string name = "pretrained reference run (RMSE 0.53 +/- 0.03, accuracy 0.643 +/- 0.03)";
  const char* hum = std::getenv("HGRADE_DATA_HUMICROEDIT");
  const char* cache = std::getenv(kCacheEnvVar);
  const bool have_weights =
      cache && fs::exists(fs::path(cache) / family_str(Family::bert_base_uncased));
  if (!hum || !have_weights) {
    return skip(9, name +
                       " — converted pretrained weights or datasets not present (set "
                       "HGRADE_CACHE and HGRADE_DATA_HUMICROEDIT)");
  }

  const fs::path hroot(hum);
  const auto train = parse_task1_file((hroot / "task1" / "train.csv").string());
  const auto dev = parse_task1_file((hroot / "task1" / "dev.csv").string());
  const auto test = parse_task1_file((hroot / "task1" / "test.csv").string());

  EncoderBackend backend =
      load_backend(family_defaults(Family::bert_base_uncased), WeightSource::published_pretrained,
                   {});
  GraderModel model(std::move(backend), 1);
  model.set_train_dataset(SourceDataset::humicroedit);

  GraderTrainConfig config;
  config.epochs = 4;
  config.batch = 16;
  config.learn_rate = 2e-5;
  config.seed = 1;
  train_grader(model, DatasetSplit{SplitName::train, SourceDataset::humicroedit, train},
               DatasetSplit{SplitName::dev, SourceDataset::humicroedit, dev}, config);

  const std::vector<GradePrediction> preds = predict_grades(model, test, {});
  std::vector<double> p, t;
  for (size_t i = 0; i < preds.size(); ++i) {
    p.push_back(preds[i].grade);
    t.push_back(*test[i].mean_grade);
  }
  const double test_rmse = rmse(p, t);

  std::vector<PairRecord> all_pairs;
  for (const char* part : {"train.csv", "dev.csv", "test.csv"}) {
    const auto pairs = parse_task2_file((hroot / "task2" / part).string());
    all_pairs.insert(all_pairs.end(), pairs.begin(), pairs.end());
  }
  const std::vector<PairPrediction> pair_preds = predict_pairs(model, all_pairs);
  std::vector<int> pl, gl;
  for (size_t i = 0; i < all_pairs.size(); ++i) {
    pl.push_back(pair_preds[i].label);
    gl.push_back(*all_pairs[i].gold_label);
  }
  const double acc = categorical_accuracy(pl, gl);

  const std::string detail = fmt(" (RMSE %.5f, accuracy %.5f)", test_rmse, acc);
  if (std::abs(test_rmse - 0.53) <= 0.03 && std::abs(acc - 0.643) <= 0.03) {
    pass(9, name + detail);
  } else {
    fail(9, name + detail);
  }
}

// ---------------------------------------------------------------------------
// 10. Directional findings — soft, logged, never a hard failure.

void criterion_10(const TinyRun& tiny) {
  const std::string name = "directional findings (soft)";

  if (tiny.model && !tiny.test_records.empty()) {
    const DatasetAttentionReport report =
        summarize_dataset(*tiny.model, tiny.test_records, 10);
    std::string heads;
    for (Eigen::Index h = 0; h < report.per_head_means.cols(); ++h) {
      if (report.per_head_means(0, h) > report.per_head_means(1, h)) {
        if (!heads.empty()) heads += ",";
        heads += std::to_string(h + 1);
      }
    }
    if (heads.empty()) {
      info("criterion 10: no head shows a higher best-group edited-attention share "
           "(tiny desk-scale probe; finding not reproduced at this scale)");
    } else {
      info("criterion 10: best-prediction group shows higher mean edited-attention share "
           "than the worst group for head(s) " +
           heads + " (tiny desk-scale probe)");
    }
  }

  const char* cache = std::getenv(kCacheEnvVar);
  if (!cache) {
    info("criterion 10: LM-fine-tuning comparison and cross-dataset degradation need "
         "pretrained assets; not evaluated in this environment");
  }
  pass(10, name + " — findings logged above, not gated");
}

}  // namespace

int main() {
  std::printf("acceptance gate: headline humor grading toolkit\n");
  run_criterion(1, "parser goldens", criterion_1);
  run_criterion(2, "metric oracles", criterion_2);
  run_criterion(3, "masking statistics", criterion_3);
  run_criterion(4, "pairwise consistency", criterion_4);

  TinyRun tiny;
  run_criterion(5, "tiny end-to-end", [&]() { tiny = criterion_5(); });

  run_criterion(6, "attention properties", criterion_6);
  run_criterion(7, "split determinism", criterion_7);
  run_criterion(8, "official ingest counts", criterion_8);
  run_criterion(9, "pretrained reference run", criterion_9);
  run_criterion(10, "directional findings", [&]() { criterion_10(tiny); });

  if (g_failures == 0) {
    std::printf("acceptance: all gated criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
