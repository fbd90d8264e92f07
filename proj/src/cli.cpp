#include "sos/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"
#include "sos/eval.hpp"
#include "sos/log.hpp"
#include "sos/model_io.hpp"
#include "sos/run_config.hpp"
#include "sos/synth_data.hpp"

namespace sos {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

struct Options {
  std::string config;
  std::size_t threads = 1;
  bool verbose = false;
};

RunConfig load_config(const Options& opt) {
  std::string path = opt.config;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  }
  if (path.empty()) throw ConfigError(std::string("no --config given and ") + kConfigEnvVar + " is unset");
  return RunConfig::load(path);
}

json manifest(const std::string& stage, const RunConfig* cfg, const Options& opt) {
  json m{{"stage", stage},
         {"model_format_version", kModelFormatVersion},
         {"threads", opt.threads},
         {"timings", json::object()},
         {"outputs", json::array()}};
  if (cfg != nullptr) {
    m["config"] = cfg->to_json();
    m["seeds"] = {{"global", cfg->seed},
                  {"train", cfg->train.seed},
                  {"sampler", cfg->sampler.seed},
                  {"finetune", cfg->finetune ? json(cfg->finetune->seed) : json(nullptr)}};
  }
  return m;
}

json class_counts(const Table& table) {
  json counts = json::object();
  for (std::size_t k = 0; k < table.class_labels().size(); ++k)
    counts[table.class_labels()[k]] = table.class_rows(k).size();
  return counts;
}

fs::path models_dir(const RunConfig& cfg) { return cfg.output_dir / "models"; }
fs::path finetuned_dir(const RunConfig& cfg) { return cfg.output_dir / "models_finetuned"; }

int run_prep(const Options& opt) {
  const auto start = Clock::now();
  const RunConfig cfg = load_config(opt);
  const Table table = load_table(cfg.train_csv, Schema::load(cfg.schema));
  const Encoder encoder = fit_encoder(table);
  const ClassPartition part = partition_classes(table);

  fs::create_directories(cfg.output_dir);
  write_json(cfg.output_dir / "encoder.json", encoder.to_json());
  json m = manifest("prep", &cfg, opt);
  m["rows"] = table.size();
  m["dim"] = encoder.dim();
  m["class_counts"] = class_counts(table);
  m["major"] = table.class_labels()[part.major];
  m["outputs"].push_back((cfg.output_dir / "encoder.json").string());
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_prep.json", m);
  return 0;
}

int run_train(const Options& opt) {
  const auto start = Clock::now();
  const RunConfig cfg = load_config(opt);
  const Table table = load_table(cfg.train_csv, Schema::load(cfg.schema));
  const Encoder encoder = fit_encoder(table);
  TrainedModels trained = train_models(table, encoder, cfg.net, cfg.sde, cfg.train, opt.threads);

  const fs::path dir = models_dir(cfg);
  save_models(dir, trained.models);
  json m = manifest("train", &cfg, opt);
  json per_class = json::object();
  double epoch_seconds = 0.0;
  std::size_t epochs = 0;
  for (std::size_t k = 0; k < trained.logs.size(); ++k) {
    const fs::path log_path = dir / ("loss_class_" + std::to_string(k) + ".csv");
    write_loss_log(trained.logs[k], log_path.string());
    m["outputs"].push_back(log_path.string());
    double secs = 0.0;
    for (const auto& e : trained.logs[k]) secs += e.wall_seconds;
    epoch_seconds += secs;
    epochs += trained.logs[k].size();
    per_class[table.class_labels()[k]] = {
        {"rows", table.class_rows(k).size()},
        {"final_loss", trained.logs[k].empty() ? json(nullptr) : json(trained.logs[k].back().mean_loss)}};
  }
  m["outputs"].push_back(dir.string());
  m["classes"] = per_class;
  m["avg_class_size"] = static_cast<double>(table.size()) / static_cast<double>(table.class_labels().size());
  m["timings"]["train_seconds"] = trained.wall_seconds;
  m["timings"]["train_seconds_per_epoch"] = epochs ? epoch_seconds / static_cast<double>(epochs) : 0.0;
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_train.json", m);
  return 0;
}

int run_finetune(const Options& opt) {
  const auto start = Clock::now();
  const RunConfig cfg = load_config(opt);
  if (!cfg.finetune) throw ConfigError("config has no 'finetune' section");
  const Table table = load_table(cfg.train_csv, Schema::load(cfg.schema));
  ModelSet models = load_models(models_dir(cfg));
  const FinetuneReport report = finetune_models(models, table, *cfg.finetune, cfg.sampler.steps, opt.threads);

  save_models(finetuned_dir(cfg), models);
  json m = manifest("finetune", &cfg, opt);
  json per_class = json::object();
  for (std::size_t k = 0; k < report.triggers_per_class.size(); ++k)
    per_class[table.class_labels()[k]] = report.triggers_per_class[k];
  m["trigger_rate"] = report.trigger_rate();
  m["triggers"] = per_class;
  m["evaluations"] = report.evaluations;
  m["skipped_zero_score"] = report.skipped;
  m["outputs"].push_back(finetuned_dir(cfg).string());
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_finetune.json", m);
  log::info("fine-tune trigger rate " + std::to_string(report.trigger_rate()));
  return 0;
}

int run_oversample(const Options& opt, const std::string& option_override) {
  const auto start = Clock::now();
  RunConfig cfg = load_config(opt);
  if (!option_override.empty()) cfg.option = oversample_option_from_string(option_override);
  const Table table = load_table(cfg.train_csv, Schema::load(cfg.schema));
  const fs::path dir = cfg.finetune ? finetuned_dir(cfg) : models_dir(cfg);
  const ModelSet models = load_models(dir);
  const BalanceResult result = balance(table, models, cfg.option, cfg.sampler, opt.threads);

  const fs::path out = cfg.output_dir / "augmented.csv";
  result.table.write_csv(out);
  json m = manifest("oversample", &cfg, opt);
  json generated = json::object();
  for (std::size_t k = 0; k < result.generated.size(); ++k) generated[table.class_labels()[k]] = result.generated[k];
  m["models"] = dir.string();
  m["generated"] = generated;
  m["class_counts_before"] = class_counts(table);
  m["class_counts_after"] = class_counts(result.table);
  m["outputs"].push_back(out.string());
  m["timings"]["total_generation_seconds"] = result.wall_seconds;
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_oversample.json", m);
  return 0;
}

int run_synth_full(const Options& opt) {
  const auto start = Clock::now();
  const RunConfig cfg = load_config(opt);
  const Table table = load_table(cfg.train_csv, Schema::load(cfg.schema));
  const Encoder encoder = fit_encoder(table);
  const SynthResult result = synth_full(table, encoder, cfg.net, cfg.sde, cfg.train, cfg.sampler);

  fs::create_directories(cfg.output_dir);
  const fs::path out = cfg.output_dir / "synthetic.csv";
  result.table.write_csv(out);
  write_loss_log(result.log, (cfg.output_dir / "loss_synth_full.csv").string());
  json m = manifest("synth-full", &cfg, opt);
  m["rows"] = result.table.size();
  m["class_counts"] = class_counts(result.table);
  m["outputs"].push_back(out.string());
  m["timings"]["train_seconds"] = result.train_seconds;
  m["timings"]["total_generation_seconds"] = result.generate_seconds;
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_synth-full.json", m);
  return 0;
}

int run_eval(const Options& opt, const std::string& train_override, std::size_t smote_k, const std::string& out_path) {
  const auto start = Clock::now();
  const RunConfig cfg = load_config(opt);
  const Schema schema = Schema::load(cfg.schema);
  Table train = load_table(train_override.empty() ? cfg.train_csv : fs::path(train_override), schema);
  std::optional<Table> test;
  if (cfg.test_csv) {
    test = load_table(*cfg.test_csv, schema);
  } else {
    auto [tr, te] = stratified_split(train, cfg.eval.test_fraction, cfg.seed);
    train = std::move(tr);
    test = std::move(te);
  }
  if (smote_k > 0) train = smote_balance(train, fit_encoder(train), smote_k, cfg.seed);
  const EvalSummary summary = evaluate(train, *test, cfg.eval);

  fs::create_directories(cfg.output_dir);
  const fs::path out = out_path.empty() ? cfg.output_dir / "metrics.json" : fs::path(out_path);
  write_json(out, summary.to_json());
  json m = manifest("eval", &cfg, opt);
  m["train_source"] = train_override.empty() ? cfg.train_csv.string() : train_override;
  m["smote_k"] = smote_k;
  m["metrics"] = summary.to_json();
  m["outputs"].push_back(out.string());
  m["timings"]["total_seconds"] = seconds_since(start);
  write_json(cfg.output_dir / "manifest_eval.json", m);
  std::cout << "weighted F1 " << summary.overall.mean << " +- " << summary.overall.std << '\n';
  return 0;
}

int run_histogram(const Options& opt, const std::string& column, std::size_t bins, const std::string& fake_path,
                  const std::string& out_path) {
  const RunConfig cfg = load_config(opt);
  const Schema schema = Schema::load(cfg.schema);
  const Table real = load_table(cfg.train_csv, schema);
  std::optional<Table> fake;
  if (!fake_path.empty()) fake = load_table(fake_path, schema);
  const auto hist = histogram(real, column, bins, fake ? &*fake : nullptr);
  fs::create_directories(cfg.output_dir);
  const fs::path out = out_path.empty() ? cfg.output_dir / ("hist_" + column + ".csv") : fs::path(out_path);
  write_histogram_csv(hist, out.string());
  json m = manifest("histogram", &cfg, opt);
  m["column"] = column;
  m["bins"] = bins;
  m["fake"] = fake_path;
  m["outputs"].push_back(out.string());
  write_json(cfg.output_dir / ("manifest_histogram_" + column + ".json"), m);
  return 0;
}

int run_make_synth(const Options& opt, const std::string& kind, const std::string& out_dir, std::uint64_t seed,
                   const SynthParams& params) {
  const SynthKind k = synth_kind_from_string(kind);
  const SynthDataset data = make_synth(k, params, seed);
  const fs::path dir = out_dir;
  fs::create_directories(dir);
  data.train.write_csv(dir / "train.csv");
  data.test.write_csv(dir / "test.csv");
  write_json(dir / "schema.json", data.train.schema().to_json());
  json m = manifest("make-synth", nullptr, opt);
  m["kind"] = kind;
  m["seed"] = seed;
  m["params"] = {{"major", params.major},   {"minor", params.minor}, {"minor2", params.minor2},
                 {"delta", params.delta},   {"minor_scale", params.minor_scale},
                 {"mean", params.mean},     {"std", params.std},     {"rows", params.rows},
                 {"test_fraction", params.test_fraction}};
  m["class_counts_train"] = class_counts(data.train);
  m["class_counts_test"] = class_counts(data.test);
  m["outputs"] = {(dir / "train.csv").string(), (dir / "test.csv").string(), (dir / "schema.json").string()};
  write_json(dir / "manifest_make-synth.json", m);
  return 0;
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
  CLI::App app{"Score-based oversampling for imbalanced tabular data"};
  app.require_subcommand(1);
  app.fallthrough();
  Options opt;
  app.add_option("--threads", opt.threads, "Cap on worker threads (1 = bit-reproducible)")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", opt.verbose, "Progress messages on stderr");

  auto with_config = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, std::string("Run config JSON (default: $") + kConfigEnvVar + ")");
    return sub;
  };
  auto* prep = with_config(app.add_subcommand("prep", "Fit and write the encoder; report class counts"));
  auto* train = with_config(app.add_subcommand("train", "Train one score network per class"));
  auto* finetune = with_config(app.add_subcommand("finetune", "Fine-tune minor-class networks"));
  auto* oversample = with_config(app.add_subcommand("oversample", "Balance the training table with fake rows"));
  std::string option_override;
  oversample->add_option("--option", option_override, "boundary | regular (overrides the config)");
  auto* synth = with_config(app.add_subcommand("synth-full", "Synthesize a full fake table"));
  auto* eval = with_config(app.add_subcommand("eval", "Weighted F1 of downstream classifiers"));
  std::string eval_train, eval_out;
  std::size_t smote_k = 0;
  eval->add_option("--train", eval_train, "Training CSV to evaluate (default: config train_csv)");
  eval->add_option("--smote", smote_k, "Balance the training table with SMOTE(k) first");
  eval->add_option("--out", eval_out, "Metrics JSON path");
  auto* hist = with_config(app.add_subcommand("histogram", "Column histogram of real vs fake rows"));
  std::string hist_column, hist_fake, hist_out;
  std::size_t hist_bins = 20;
  hist->add_option("--column", hist_column, "Continuous column")->required();
  hist->add_option("--bins", hist_bins, "Number of equal-width bins")->check(CLI::PositiveNumber);
  hist->add_option("--fake", hist_fake, "CSV of fake rows to bin against the real edges");
  hist->add_option("--out", hist_out, "Histogram CSV path");
  auto* make = app.add_subcommand("make-synth", "Write a synthetic train/test dataset");
  std::string make_kind, make_dir;
  std::uint64_t make_seed = 0;
  SynthParams params;
  make->add_option("--kind", make_kind, "two_gauss_imbalanced | multi_minor | gauss1d")->required();
  make->add_option("--out-dir", make_dir, "Output directory")->required();
  make->add_option("--seed", make_seed);
  make->add_option("--major", params.major);
  make->add_option("--minor", params.minor);
  make->add_option("--minor2", params.minor2);
  make->add_option("--delta", params.delta);
  make->add_option("--minor-scale", params.minor_scale);
  make->add_option("--mean", params.mean);
  make->add_option("--std", params.std);
  make->add_option("--rows", params.rows);
  make->add_option("--test-fraction", params.test_fraction);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorCategory::Config);
  }
  log::set_level(opt.verbose ? log::Level::Info : log::Level::Quiet);

  try {
    if (*prep) return run_prep(opt);
    if (*train) return run_train(opt);
    if (*finetune) return run_finetune(opt);
    if (*oversample) return run_oversample(opt, option_override);
    if (*synth) return run_synth_full(opt);
    if (*eval) return run_eval(opt, eval_train, smote_k, eval_out);
    if (*hist) return run_histogram(opt, hist_column, hist_bins, hist_fake, hist_out);
    if (*make) return run_make_synth(opt, make_kind, make_dir, make_seed, params);
  } catch (const Error& e) {
    std::cerr << "sos: " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "sos: " << e.what() << '\n';
    return exit_code(ErrorCategory::Data);
  }
  return exit_code(ErrorCategory::Config);
}

}  // namespace sos
