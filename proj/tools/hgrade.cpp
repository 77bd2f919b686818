// hgrade: command-line pipeline for headline humor grading.
// ingest -> (pretrain-mlm) -> train -> grade/pair -> xeval -> attn-report

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hgrade/hgrade.hpp"

namespace fs = std::filesystem;
using namespace hgrade;

namespace {

// ---------------------------------------------------------------------------
// Run directories: every command writes under <out>/<command>-<confighash>,
// so a rerun with the same configuration lands in the same place and produces
// byte-identical artifacts (manifest timestamps excluded).

std::string canonical_config(const CLI::App& cmd) {
  std::ostringstream s;
  s << cmd.get_name() << '\n';
  for (const CLI::Option* opt : cmd.get_options()) {
    if (opt->get_name() == "--help" || opt->get_name() == "--config") continue;
    s << opt->get_name() << '=';
    for (const auto& v : opt->results()) s << v << ';';
    s << '\n';
  }
  return s.str();
}

fs::path make_run_dir(const CLI::App& cmd, const std::string& out_root) {
  const std::string config = canonical_config(cmd);
  const std::string hash = hex64(fnv1a64(config)).substr(0, 8);
  fs::path dir = fs::path(out_root) / (cmd.get_name() + "-" + hash);
  fs::create_directories(dir);
  std::ofstream cfg(dir / "config.txt", std::ios::binary);
  cfg << config;
  return dir;
}

void print_diags(const DiagList& diags) {
  for (const auto& d : diags) std::cerr << "warning: " << d.category << ": " << d.message << '\n';
}

std::vector<std::string> read_corpus_texts(const std::vector<HeadlineRecord>& records) {
  std::vector<std::string> texts;
  texts.reserve(records.size() * 2);
  for (const auto& r : records) {
    texts.push_back(strip_edit(r.original_marked));
    texts.push_back(apply_edit(r.original_marked, r.edit_word));
  }
  return texts;
}

Family parse_family(const std::string& name) { return family_from_str(name); }

// Backend for a (family, init) choice. The tiny family builds its vocabulary
// from the given texts; other families need converted assets in the cache
// directory named by HGRADE_CACHE.
EncoderBackend build_backend(Family family, const std::string& init,
                             const std::vector<std::string>& vocab_texts,
                             const std::string& lm_checkpoint, uint64_t seed) {
  BackendSpec spec = family_defaults(family);
  if (init == "lm-finetuned") {
    LoadOptions opts;
    opts.checkpoint_path = lm_checkpoint;
    return load_backend(spec, WeightSource::lm_finetuned_checkpoint, opts);
  }
  if (family == Family::tiny) {
    Vocab vocab = build_whitespace_vocab(vocab_texts);
    LoadOptions opts;
    opts.tiny_vocab = &vocab;
    opts.seed = seed;
    return load_backend(spec, WeightSource::random_init, opts);
  }
  return load_backend(spec, WeightSource::published_pretrained, {});
}

// ---------------------------------------------------------------------------
// Subcommand options

struct IngestOpts {
  std::string input;
  int task = 1;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct PretrainOpts {
  std::string train;
  std::string family = "tiny";
  int epochs = 3;
  int batch = 16;
  double lr = 5e-5;
  double mask_rate = 0.15;
  int max_len = kMlmMaxLen;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct TrainOpts {
  std::string train;
  std::string dev;
  std::string family = "tiny";
  std::string init = "random";  // random | pretrained | lm-finetuned
  std::string lm_checkpoint;
  std::string dataset = "humicroedit";
  int epochs = 10;
  int batch = 16;
  double lr = 1e-3;
  int patience = 2;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct GradeOpts {
  std::string model;
  std::string input;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct PairOpts {
  std::string model;
  std::string input;
  double tie_epsilon = 0.0;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct XevalOpts {
  std::vector<std::string> models;
  std::string hum_task1_test;
  std::string hum_task2_test;
  std::vector<std::string> hum_task2_all;
  std::string fun_task1_test;
  std::vector<std::string> fun_task2_all;
  double tie_epsilon = 0.0;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct AttnOpts {
  std::string model;
  std::string input;
  int top_k = 5;
  std::vector<std::string> html_records;
  std::string out = "runs";
  uint64_t seed = 1;
};

struct SelftestOpts {
  uint64_t seed = 1;
};

// ---------------------------------------------------------------------------
// Command bodies

int run_ingest(const IngestOpts& o, const fs::path& run_dir) {
  DiagList diags;
  size_t count = 0;
  std::ofstream jsonl(run_dir / "records.jsonl", std::ios::binary);
  if (o.task == 1) {
    const auto records = parse_task1_file(o.input, &diags);
    write_jsonl(jsonl, records);
    count = records.size();
  } else if (o.task == 2) {
    const auto pairs = parse_task2_file(o.input, &diags);
    write_jsonl(jsonl, pairs);
    count = pairs.size();
  } else {
    throw Error(Err::ConfigInvalid, "task must be 1 or 2");
  }
  print_diags(diags);
  std::cout << count << " records\n";
  return 0;
}

int run_pretrain(const PretrainOpts& o, const fs::path& run_dir) {
  DiagList diags;
  const auto records = parse_task1_file(o.train, &diags);
  print_diags(diags);
  // the MLM corpus uses only the edited humorous texts, never the originals
  std::vector<std::string> corpus;
  corpus.reserve(records.size());
  for (const auto& r : records) corpus.push_back(apply_edit(r.original_marked, r.edit_word));

  EncoderBackend backend =
      build_backend(parse_family(o.family), "default", read_corpus_texts(records), "", o.seed);
  MlmConfig config;
  config.epochs = o.epochs;
  config.batch = o.batch;
  config.learn_rate = o.lr;
  config.mask_rate = o.mask_rate;
  config.max_len = o.max_len;
  config.seed = o.seed;
  const MlmResult result = lm_finetune(backend, corpus, config, (run_dir / "checkpoint").string());
  std::cout << "checkpoint " << result.checkpoint_dir << '\n';
  for (size_t e = 0; e < result.loss_history.size(); ++e) {
    std::cout << "epoch " << (e + 1) << " mean_loss " << result.loss_history[e] << '\n';
  }
  return 0;
}

int run_train(const TrainOpts& o, const fs::path& run_dir) {
  DiagList diags;
  const auto train_records = parse_task1_file(o.train, &diags);
  const auto dev_records = parse_task1_file(o.dev, &diags);
  print_diags(diags);

  EncoderBackend backend = build_backend(parse_family(o.family), o.init,
                                         read_corpus_texts(train_records), o.lm_checkpoint, o.seed);
  GraderModel model(std::move(backend), o.seed);
  model.set_train_dataset(dataset_from_str(o.dataset));

  DatasetSplit train_split{SplitName::train, model.train_dataset().value(), train_records};
  DatasetSplit dev_split{SplitName::dev, model.train_dataset().value(), dev_records};

  GraderTrainConfig config;
  config.epochs = o.epochs;
  config.batch = o.batch;
  config.learn_rate = o.lr;
  config.seed = o.seed;
  config.early_stop_patience = o.patience;
  const GraderTrainLog log = train_grader(model, train_split, dev_split, config);

  model.save((run_dir / "grader").string());
  std::ofstream hist(run_dir / "history.txt", std::ios::binary);
  hist << "epoch\ttrain_mse\tdev_mse\n";
  char buf[96];
  for (size_t e = 0; e < log.train_mse.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%zu\t%.8f\t%.8f\n", e + 1, log.train_mse[e], log.dev_mse[e]);
    hist << buf;
  }
  std::cout << "checkpoint " << (run_dir / "grader").string() << '\n';
  std::snprintf(buf, sizeof(buf), "best_epoch %d best_dev_mse %.8f\n", log.best_epoch + 1,
                log.best_dev_mse);
  std::cout << buf;
  return 0;
}

int run_grade(const GradeOpts& o, const fs::path& run_dir) {
  DiagList diags;
  const auto records = parse_task1_file(o.input, &diags);
  const GraderModel model = GraderModel::load(o.model);
  const auto preds = predict_grades(model, records, {}, &diags);
  print_diags(diags);
  std::ofstream out(run_dir / "predictions.csv", std::ios::binary);
  write_predictions_csv(out, preds);
  std::cout << preds.size() << " predictions -> " << (run_dir / "predictions.csv").string()
            << '\n';
  return 0;
}

int run_pair(const PairOpts& o, const fs::path& run_dir) {
  DiagList diags;
  const auto pairs = parse_task2_file(o.input, &diags);
  const GraderModel model = GraderModel::load(o.model);
  const auto preds = predict_pairs(model, pairs, o.tie_epsilon, {}, &diags);
  print_diags(diags);
  std::ofstream labels(run_dir / "pair_labels.csv", std::ios::binary);
  write_pair_labels_csv(labels, preds);
  std::ofstream grades(run_dir / "pair_grades.csv", std::ios::binary);
  write_pair_grades_csv(grades, preds);
  std::cout << preds.size() << " pairs -> " << (run_dir / "pair_labels.csv").string() << '\n';
  return 0;
}

std::string canonical_config_cache;  // set before dispatch, used for report hashes

std::vector<PairRecord> read_pair_files(const std::vector<std::string>& paths, DiagList* diags) {
  std::vector<PairRecord> all;
  for (const auto& p : paths) {
    auto part = parse_task2_file(p, diags);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

int run_xeval(const XevalOpts& o, const fs::path& run_dir) {
  if (o.models.empty()) throw Error(Err::ConfigInvalid, "xeval needs at least one --model");
  DiagList diags;

  std::vector<EvalDataset> datasets;
  if (!o.hum_task1_test.empty() || !o.hum_task2_test.empty() || !o.hum_task2_all.empty()) {
    EvalDataset d;
    d.dataset = SourceDataset::humicroedit;
    if (!o.hum_task1_test.empty()) {
      d.task1_test = DatasetSplit{SplitName::test, SourceDataset::humicroedit,
                                  parse_task1_file(o.hum_task1_test, &diags)};
    }
    if (!o.hum_task2_test.empty()) d.task2_test = parse_task2_file(o.hum_task2_test, &diags);
    if (!o.hum_task2_all.empty()) d.task2_all = read_pair_files(o.hum_task2_all, &diags);
    datasets.push_back(std::move(d));
  }
  if (!o.fun_task1_test.empty() || !o.fun_task2_all.empty()) {
    EvalDataset d;
    d.dataset = SourceDataset::funlines;
    if (!o.fun_task1_test.empty()) {
      d.task1_test = DatasetSplit{SplitName::test, SourceDataset::funlines,
                                  parse_task1_file(o.fun_task1_test, &diags)};
    }
    if (!o.fun_task2_all.empty()) d.task2_all = read_pair_files(o.fun_task2_all, &diags);
    datasets.push_back(std::move(d));
  }
  print_diags(diags);

  std::vector<GraderModel> models;
  models.reserve(o.models.size());
  for (const auto& path : o.models) models.push_back(GraderModel::load(path));
  std::vector<EvalModelEntry> entries;
  for (auto& m : models) entries.push_back({&m, o.seed});

  const std::string config_hash = hex64(fnv1a64(canonical_config_cache)).substr(0, 8);
  const EvalReport report = cross_dataset_eval(entries, datasets, o.tie_epsilon, {}, config_hash);

  const std::string text = render_report(report, ReportFormat::text_table);
  std::ofstream txt(run_dir / "report.txt", std::ios::binary);
  txt << text;
  std::ofstream csv(run_dir / "report.csv", std::ios::binary);
  csv << render_report(report, ReportFormat::csv);
  std::cout << text;
  return 0;
}

int run_attn(const AttnOpts& o, const fs::path& run_dir) {
  DiagList diags;
  const auto records = parse_task1_file(o.input, &diags);
  print_diags(diags);
  const GraderModel model = GraderModel::load(o.model);
  const int heads = model.backend().spec().num_heads;

  const DatasetAttentionReport report = summarize_dataset(model, records, o.top_k);
  {
    std::vector<AttentionSummary> all;
    for (const auto& r : records) all.push_back(attention_summary(model, r));
    std::ofstream shares(run_dir / "shares.csv", std::ios::binary);
    write_shares_csv(shares, all, heads);
  }
  {
    std::ofstream best(run_dir / "best_shares.csv", std::ios::binary);
    write_shares_csv(best, report.best, heads);
    std::ofstream worst(run_dir / "worst_shares.csv", std::ios::binary);
    write_shares_csv(worst, report.worst, heads);
  }
  {
    std::ofstream means(run_dir / "head_means.csv", std::ios::binary);
    means << "group";
    for (int h = 1; h <= heads; ++h) means << ",head_" << h;
    means << '\n';
    char buf[32];
    for (int row = 0; row < 2; ++row) {
      means << (row == 0 ? "best" : "worst");
      for (int h = 0; h < heads; ++h) {
        std::snprintf(buf, sizeof(buf), ",%.6f", report.per_head_means(row, h));
        means << buf;
      }
      means << '\n';
    }
  }

  // per-record visualizations: requested ids, else the two extreme records
  std::vector<std::string> wanted = o.html_records;
  if (wanted.empty()) {
    if (!report.best.empty()) wanted.push_back(report.best.front().record_id);
    if (!report.worst.empty()) wanted.push_back(report.worst.front().record_id);
  }
  for (const auto& id : wanted) {
    for (const auto& r : records) {
      if (r.id == id) {
        std::ofstream html(run_dir / ("attention-" + id + ".html"), std::ios::binary);
        html << emit_attention_html(model, r);
        break;
      }
    }
  }

  std::cout << "group mean edited-attention share per head (1-based)\n";
  char buf[32];
  for (int row = 0; row < 2; ++row) {
    std::cout << (row == 0 ? "best " : "worst");
    for (int h = 0; h < heads; ++h) {
      std::snprintf(buf, sizeof(buf), " %.4f", report.per_head_means(row, h));
      std::cout << buf;
    }
    std::cout << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// selftest: metric oracles + masking statistics + tiny end-to-end

bool selftest_metrics(uint64_t seed) {
  Rng rng(seed ^ 0xabcdULL);
  for (int trial = 0; trial < 100; ++trial) {
    const size_t n = 1 + rng.below(100);
    std::vector<double> pred(n), truth(n);
    std::vector<int> plab(n), glab(n);
    for (size_t i = 0; i < n; ++i) {
      pred[i] = rng.uniform() * 3.0;
      truth[i] = rng.uniform() * 3.0;
      plab[i] = static_cast<int>(rng.below(3));
      glab[i] = static_cast<int>(rng.below(3));
    }
    double sq = 0.0;
    for (size_t i = 0; i < n; ++i) sq += (pred[i] - truth[i]) * (pred[i] - truth[i]);
    const double want_rmse = std::sqrt(sq / static_cast<double>(n));
    size_t hits = 0;
    for (size_t i = 0; i < n; ++i) hits += plab[i] == glab[i] ? 1 : 0;
    const double want_acc = static_cast<double>(hits) / static_cast<double>(n);
    if (std::abs(rmse(pred, truth) - want_rmse) > 1e-12) return false;
    if (std::abs(categorical_accuracy(plab, glab) - want_acc) > 1e-12) return false;
  }
  return true;
}

bool selftest_masking(uint64_t seed) {
  Rng rng(seed ^ 0x77ULL);
  SpecialTokenIds specials = family_defaults(Family::tiny).specials;
  size_t eligible = 0, targeted = 0;
  while (eligible < 100000) {
    std::vector<int> ids;
    ids.push_back(specials.cls);
    for (int i = 0; i < 40; ++i) ids.push_back(10 + static_cast<int>(rng.below(500)));
    ids.push_back(specials.sep);
    const MaskingPlan plan = build_masking_plan(ids, 0.15, {}, rng, specials, 600);
    eligible += 40;
    targeted += plan.target_positions.size();
    // corruption must stay inside the target set
    for (const auto& [pos, id] : plan.corrupted_ids) {
      bool in_targets = false;
      for (int t : plan.target_positions) in_targets |= t == pos;
      if (!in_targets) return false;
      (void)id;
    }
  }
  const double fraction = static_cast<double>(targeted) / static_cast<double>(eligible);
  return fraction >= 0.145 && fraction <= 0.155;
}

bool selftest_pairwise(uint64_t seed) {
  Rng rng(seed ^ 0x99ULL);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform() * 3.0;
    const double b = rng.bernoulli(0.1) ? a : rng.uniform() * 3.0;
    const int label = pair_label(a, b, 0.0);
    const int swapped = pair_label(b, a, 0.0);
    const int want_swapped = label == 1 ? 2 : (label == 2 ? 1 : 0);
    if (swapped != want_swapped) return false;
  }
  return true;
}

bool selftest_tiny_e2e(uint64_t seed) {
  const PlantedData data = make_planted_data(160, seed);
  std::vector<HeadlineRecord> train(data.records.begin(), data.records.begin() + 120);
  std::vector<HeadlineRecord> dev(data.records.begin() + 120, data.records.end());

  std::vector<std::string> texts;
  for (const auto& r : train) {
    texts.push_back(strip_edit(r.original_marked));
    texts.push_back(apply_edit(r.original_marked, r.edit_word));
  }
  Vocab vocab = build_whitespace_vocab(texts, 1);
  GraderModel model(make_tiny_backend(vocab, seed), seed);
  model.set_train_dataset(SourceDataset::humicroedit);

  DatasetSplit train_split{SplitName::train, SourceDataset::humicroedit, train};
  DatasetSplit dev_split{SplitName::dev, SourceDataset::humicroedit, dev};
  GraderTrainConfig config;
  config.epochs = 10;
  config.batch = 16;
  config.learn_rate = 2e-3;
  config.seed = seed;
  config.early_stop_patience = 10;
  const GraderTrainLog log = train_grader(model, train_split, dev_split, config);
  if (log.train_mse.empty()) return false;
  if (!(log.train_mse.back() < log.train_mse.front())) return false;
  const double baseline = constant_mean_baseline_rmse(dev);
  return std::sqrt(log.best_dev_mse) < baseline;
}

int run_selftest(const SelftestOpts& o) {
  struct Suite {
    const char* name;
    bool (*fn)(uint64_t);
  };
  const Suite suites[] = {
      {"metric-oracles", selftest_metrics},
      {"masking-statistics", selftest_masking},
      {"pairwise-consistency", selftest_pairwise},
      {"tiny-end-to-end", selftest_tiny_e2e},
  };
  int failures = 0;
  for (const auto& s : suites) {
    const bool ok = s.fn(o.seed);
    std::cout << (ok ? "PASS" : "FAIL") << ' ' << s.name << '\n';
    failures += ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"headline humor grading pipeline"};
  app.require_subcommand(1);
  app.set_config("--config");

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "parse a dataset file and count records");
  c_ingest->add_option("input", ingest.input, "task file (CSV)")->required();
  c_ingest->add_option("--task", ingest.task, "1 = grades, 2 = pairs");
  c_ingest->add_option("--out", ingest.out, "output root");
  c_ingest->add_option("--seed", ingest.seed, "random seed");

  PretrainOpts pre;
  auto* c_pre = app.add_subcommand("pretrain-mlm", "LM fine-tune a backend on edited headlines");
  c_pre->add_option("--train", pre.train, "task-1 file supplying the edited texts")->required();
  c_pre->add_option("--family", pre.family, "model family");
  c_pre->add_option("--epochs", pre.epochs, "training epochs");
  c_pre->add_option("--batch", pre.batch, "batch size");
  c_pre->add_option("--lr", pre.lr, "learning rate");
  c_pre->add_option("--mask-rate", pre.mask_rate, "masking rate in (0,1]");
  c_pre->add_option("--max-len", pre.max_len, "maximum sequence length");
  c_pre->add_option("--out", pre.out, "output root");
  c_pre->add_option("--seed", pre.seed, "random seed");

  TrainOpts train;
  auto* c_train = app.add_subcommand("train", "train the grader head (and encoder)");
  c_train->add_option("--train", train.train, "task-1 training file")->required();
  c_train->add_option("--dev", train.dev, "task-1 development file")->required();
  c_train->add_option("--family", train.family, "model family");
  c_train->add_option("--init", train.init, "random | pretrained | lm-finetuned");
  c_train->add_option("--lm-checkpoint", train.lm_checkpoint, "checkpoint for lm-finetuned init");
  c_train->add_option("--dataset", train.dataset, "training dataset name");
  c_train->add_option("--epochs", train.epochs, "training epochs");
  c_train->add_option("--batch", train.batch, "batch size");
  c_train->add_option("--lr", train.lr, "learning rate");
  c_train->add_option("--patience", train.patience, "early-stop patience (epochs)");
  c_train->add_option("--out", train.out, "output root");
  c_train->add_option("--seed", train.seed, "random seed");

  GradeOpts grade;
  auto* c_grade = app.add_subcommand("grade", "predict grades for a task-1 file");
  c_grade->add_option("--model", grade.model, "grader checkpoint directory")->required();
  c_grade->add_option("--input", grade.input, "task-1 file")->required();
  c_grade->add_option("--out", grade.out, "output root");
  c_grade->add_option("--seed", grade.seed, "random seed");

  PairOpts pair;
  auto* c_pair = app.add_subcommand("pair", "zero-shot pairwise labels for a task-2 file");
  c_pair->add_option("--model", pair.model, "grader checkpoint directory")->required();
  c_pair->add_option("--input", pair.input, "task-2 file")->required();
  c_pair->add_option("--tie-epsilon", pair.tie_epsilon, "tie threshold on grades");
  c_pair->add_option("--out", pair.out, "output root");
  c_pair->add_option("--seed", pair.seed, "random seed");

  XevalOpts xeval;
  auto* c_xeval = app.add_subcommand("xeval", "cross-dataset evaluation matrix");
  c_xeval->add_option("--model", xeval.models, "grader checkpoint directory (repeatable)")
      ->required();
  c_xeval->add_option("--humicroedit-task1-test", xeval.hum_task1_test, "task-1 test file");
  c_xeval->add_option("--humicroedit-task2-test", xeval.hum_task2_test, "task-2 test file");
  c_xeval->add_option("--humicroedit-task2-all", xeval.hum_task2_all,
                      "task-2 file (repeatable; concatenated)");
  c_xeval->add_option("--funlines-task1-test", xeval.fun_task1_test, "task-1 test file");
  c_xeval->add_option("--funlines-task2-all", xeval.fun_task2_all,
                      "task-2 file (repeatable; concatenated)");
  c_xeval->add_option("--tie-epsilon", xeval.tie_epsilon, "tie threshold on grades");
  c_xeval->add_option("--out", xeval.out, "output root");
  c_xeval->add_option("--seed", xeval.seed, "random seed");

  AttnOpts attn;
  auto* c_attn = app.add_subcommand("attn-report", "edited-token attention analysis");
  c_attn->add_option("--model", attn.model, "grader checkpoint directory")->required();
  c_attn->add_option("--input", attn.input, "task-1 file with grades")->required();
  c_attn->add_option("--top-k", attn.top_k, "best/worst group size");
  c_attn->add_option("--html-record", attn.html_records,
                     "record id to render as a document (repeatable)");
  c_attn->add_option("--out", attn.out, "output root");
  c_attn->add_option("--seed", attn.seed, "random seed");

  SelftestOpts selftest;
  auto* c_selftest = app.add_subcommand("selftest", "run built-in verification suites");
  c_selftest->add_option("--seed", selftest.seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_ingest->parsed()) return run_ingest(ingest, make_run_dir(*c_ingest, ingest.out));
    if (c_pre->parsed()) return run_pretrain(pre, make_run_dir(*c_pre, pre.out));
    if (c_train->parsed()) return run_train(train, make_run_dir(*c_train, train.out));
    if (c_grade->parsed()) return run_grade(grade, make_run_dir(*c_grade, grade.out));
    if (c_pair->parsed()) return run_pair(pair, make_run_dir(*c_pair, pair.out));
    if (c_xeval->parsed()) {
      canonical_config_cache = canonical_config(*c_xeval);
      return run_xeval(xeval, make_run_dir(*c_xeval, xeval.out));
    }
    if (c_attn->parsed()) return run_attn(attn, make_run_dir(*c_attn, attn.out));
    if (c_selftest->parsed()) return run_selftest(selftest);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
