#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sos/error.hpp"
#include "sos/model_io.hpp"
#include "sos/run_config.hpp"
#include "sos/synth_data.hpp"

using namespace sos;
namespace fs = std::filesystem;

namespace {

// A fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sos_app_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ModelSet small_models() {
  Rng rng(3);
  std::vector<Row> rows;
  for (int i = 0; i < 30; ++i)
    rows.push_back(Row{rng.normal(), rng.normal(), std::string(i % 3 ? "u" : "v"), std::string(i < 20 ? "A" : "B")});
  const Table t(Schema({{"x", ColumnKind::Continuous},
                        {"y", ColumnKind::Continuous},
                        {"c", ColumnKind::Categorical},
                        {"label", ColumnKind::Categorical}},
                       "label"),
                rows);
  NetSpec spec;
  spec.layer_type = LayerType::Squash;
  spec.activation = Activation::LeakyReLU;
  spec.hidden_dims = {7, 5};
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 8;
  SdeConfig sde;
  sde.family = SdeFamily::VE;
  return train_models(t, fit_encoder(t), spec, sde, cfg).models;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SOS_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("model files round trip exactly") {
  TempDir dir("models");
  const ModelSet m = small_models();
  save_models(dir.path, m);
  CHECK(fs::exists(dir.path / "modelset.json"));
  const ModelSet back = load_models(dir.path);
  REQUIRE(back.nets.size() == m.nets.size());
  CHECK(back.major == m.major);
  CHECK(back.finetuned == m.finetuned);
  CHECK(back.sde == m.sde);
  CHECK(back.encoder.dim() == m.encoder.dim());
  Rng rng(9);
  const Matrix probes = rng.normal_matrix(100, static_cast<Eigen::Index>(m.encoder.dim()));
  Vector times(100);
  for (Eigen::Index i = 0; i < 100; ++i) times(i) = 0.01 + 0.0099 * static_cast<double>(i);
  for (std::size_t k = 0; k < m.nets.size(); ++k) {
    CHECK(back.nets[k].params == m.nets[k].params);
    CHECK(back.nets[k].spec == m.nets[k].spec);
    CHECK(forward(back.nets[k].spec, back.nets[k].params, probes, times) ==
          forward(m.nets[k].spec, m.nets[k].params, probes, times));
  }
}

TEST_CASE("model loading errors") {
  TempDir dir("model_errors");
  save_models(dir.path, small_models());
  SUBCASE("tampered version") {
    nlohmann::json j = nlohmann::json::parse(slurp(dir.path / "modelset.json"));
    j["format_version"] = 99;
    std::ofstream(dir.path / "modelset.json") << j.dump();
    CHECK_THROWS_AS(load_models(dir.path), VersionMismatchError);
  }
  SUBCASE("missing class file names the class") {
    fs::remove(dir.path / "class_1.json");
    try {
      load_models(dir.path);
      FAIL("expected a missing-artifact error");
    } catch (const MissingArtifactError& e) {
      CHECK(std::string(e.what()).find('1') != std::string::npos);
      CHECK(exit_code(e.category()) == 4);
    }
  }
  SUBCASE("corrupt file") {
    std::ofstream(dir.path / "class_0.json") << "{not json";
    CHECK_THROWS_AS(load_models(dir.path), CorruptFileError);
  }
  SUBCASE("missing directory") { CHECK_THROWS_AS(load_models(dir.path / "nope"), MissingArtifactError); }
}

TEST_CASE("synthetic datasets") {
  SUBCASE("stratified split arithmetic") {
    SynthParams p;
    p.major = 2000;
    p.minor = 200;
    const SynthDataset d = make_synth(SynthKind::TwoGaussImbalanced, p, 1);
    CHECK(d.full.size() == 2200);
    CHECK(d.train.size() == 1760);
    CHECK(d.test.size() == 440);
    for (const Table* t : {&d.train, &d.test}) {
      std::vector<std::size_t> counts;
      for (std::size_t k = 0; k < t->class_labels().size(); ++k) counts.push_back(t->class_rows(k).size());
      std::sort(counts.begin(), counts.end());
      if (t == &d.train) CHECK(counts == std::vector<std::size_t>{160, 1600});
      else CHECK(counts == std::vector<std::size_t>{40, 400});
    }
  }
  SUBCASE("deterministic bytes for a fixed seed") {
    TempDir dir("synth");
    SynthParams p;
    p.major = 300;
    p.minor = 30;
    make_synth(SynthKind::MultiMinor, p, 5).train.write_csv(dir.path / "a.csv");
    make_synth(SynthKind::MultiMinor, p, 5).train.write_csv(dir.path / "b.csv");
    make_synth(SynthKind::MultiMinor, p, 6).train.write_csv(dir.path / "c.csv");
    CHECK(slurp(dir.path / "a.csv") == slurp(dir.path / "b.csv"));
    CHECK(slurp(dir.path / "a.csv") != slurp(dir.path / "c.csv"));
  }
  SUBCASE("one-dimensional Gaussian mean") {
    SynthParams p;
    p.mean = 2.0;
    p.std = 0.5;
    p.rows = 5000;
    const Table t = generate_table(SynthKind::Gauss1d, p, 3);
    REQUIRE(t.size() == 5000);
    double sum = 0.0;
    for (const Row& r : t.rows()) sum += std::get<double>(r[0]);
    CHECK(std::abs(sum / 5000.0 - 2.0) < 0.02);
  }
  SUBCASE("three-class shape") {
    SynthParams p;
    p.major = 1064;
    p.minor = 702;
    p.minor2 = 117;
    const Table t = generate_table(SynthKind::MultiMinor, p, 2);
    CHECK(t.class_labels().size() == 3);
    CHECK(t.size() == 1064 + 702 + 117);
  }
  SUBCASE("nonpositive counts are rejected") {
    SynthParams p;
    p.minor = 0;
    CHECK_THROWS_AS(make_synth(SynthKind::TwoGaussImbalanced, p, 1), ConfigError);
  }
  SUBCASE("names") {
    CHECK(synth_kind_from_string("two_gauss_imbalanced") == SynthKind::TwoGaussImbalanced);
    CHECK(synth_kind_from_string("gauss1d") == SynthKind::Gauss1d);
    CHECK_THROWS_AS(synth_kind_from_string("x"), ConfigError);
  }
}

TEST_CASE("run config") {
  TempDir dir("config");
  const nlohmann::json j = {{"schema", "schema.json"},
                            {"train_csv", "data/train.csv"},
                            {"output_dir", "/tmp/abs_out"},
                            {"seed", 42},
                            {"sde", {{"family", "subvp"}}},
                            {"net", {{"layer_type", "concat"}, {"hidden_dims", {16, 16}}}},
                            {"train", {{"epochs", 7}}},
                            {"finetune", {{"xi_degrees", 30.0}}},
                            {"sampler", {{"predictor", "probability_flow"}, {"steps", 12}}},
                            {"option", "boundary"}};
  std::ofstream(dir.path / "run.json") << j.dump();
  const RunConfig c = RunConfig::load(dir.path / "run.json");
  CHECK(c.schema == dir.path / "schema.json");
  CHECK(c.train_csv == dir.path / "data/train.csv");
  CHECK(c.output_dir == fs::path("/tmp/abs_out"));
  CHECK(!c.test_csv);
  CHECK(c.sde.family == SdeFamily::SubVP);
  CHECK(c.net.layer_type == LayerType::Concat);
  CHECK(c.net.hidden_dims == std::vector<std::size_t>{16, 16});
  CHECK(c.train.epochs == 7);
  CHECK(c.train.seed == 42);
  REQUIRE(c.finetune);
  CHECK(c.finetune->xi_degrees == 30.0);
  CHECK(c.finetune->seed == 42);
  CHECK(c.sampler.predictor == Predictor::ProbabilityFlow);
  CHECK(c.sampler.steps == 12);
  CHECK(c.option == OversampleOption::Boundary);

  nlohmann::json no_ft = j;
  no_ft.erase("finetune");
  CHECK(!RunConfig::from_json(no_ft, dir.path).finetune);

  nlohmann::json bad = j;
  bad["sampler"]["steps"] = 0;
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path), ConfigError);
  bad = j;
  bad.erase("schema");
  CHECK_THROWS_AS(RunConfig::from_json(bad, dir.path), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(dir.path / "missing.json"), ConfigError);
}

TEST_CASE("command line") {
  TempDir dir("cli");
  const fs::path data = dir.path / "data";
  REQUIRE(run_cli("make-synth --kind two_gauss_imbalanced --major 60 --minor 12 --seed 1 --out-dir " + data.string()) ==
          0);
  REQUIRE(fs::exists(data / "train.csv"));
  REQUIRE(fs::exists(data / "schema.json"));
  const std::string train_before = slurp(data / "train.csv");

  const nlohmann::json cfg = {{"schema", "data/schema.json"},
                              {"train_csv", "data/train.csv"},
                              {"test_csv", "data/test.csv"},
                              {"output_dir", "out"},
                              {"seed", 3},
                              {"net", {{"hidden_dims", {8}}}},
                              {"train", {{"epochs", 2}, {"batch_size", 16}}},
                              {"sampler", {{"steps", 3}}},
                              {"eval", {{"seeds", {0}}, {"classifiers", {"logistic_regression"}}}}};
  std::ofstream(dir.path / "run.json") << cfg.dump();
  const std::string conf = (dir.path / "run.json").string();

  SUBCASE("missing config is a config error with no outputs") {
    CHECK(run_cli("train --config " + (dir.path / "absent.json").string()) == 2);
    CHECK(!fs::exists(dir.path / "out"));
  }
  SUBCASE("oversampling before training is a missing-artifact error") {
    CHECK(run_cli("oversample --config " + conf) == 4);
  }
  SUBCASE("unknown subcommand") { CHECK(run_cli("frobnicate") == 2); }
  SUBCASE("happy path") {
    REQUIRE(run_cli("train --config " + conf) == 0);
    CHECK(fs::exists(dir.path / "out/models/modelset.json"));
    CHECK(fs::exists(dir.path / "out/models/class_0.json"));
    CHECK(fs::exists(dir.path / "out/models/class_1.json"));
    CHECK(fs::exists(dir.path / "out/manifest_train.json"));
    const nlohmann::json manifest = nlohmann::json::parse(slurp(dir.path / "out/manifest_train.json"));
    CHECK(manifest.contains("timings"));
    CHECK(manifest.at("model_format_version") == kModelFormatVersion);

    REQUIRE(run_cli("oversample --config " + conf + " --threads 1") == 0);
    const Table schema_probe = load_table(dir.path / "out/augmented.csv", Schema::load(data / "schema.json"));
    CHECK(schema_probe.class_rows(0).size() == schema_probe.class_rows(1).size());

    CHECK(run_cli("eval --config " + conf + " --train " + (dir.path / "out/augmented.csv").string()) == 0);
    CHECK(fs::exists(dir.path / "out/metrics.json"));
    CHECK(run_cli("histogram --config " + conf + " --column x1 --bins 5") == 0);
    CHECK(fs::exists(dir.path / "out/hist_x1.csv"));
    CHECK(slurp(data / "train.csv") == train_before);  // inputs untouched
  }
}
