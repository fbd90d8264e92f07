#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sos/error.hpp"
#include "sos/training.hpp"

using namespace sos;

namespace {

NetSpec small_spec(LayerType lt, Activation act, std::size_t dim) {
  NetSpec s;
  s.layer_type = lt;
  s.activation = act;
  s.hidden_dims = {6, 5};
  s.input_dim = dim;
  return s;
}

}  // namespace

TEST_CASE("loss equals the mean residual norm for given draws") {
  const NetSpec s = small_spec(LayerType::Concatsquash, Activation::SoftPlus, 2);
  const Params p = init_params(s, 1);
  const SdeConfig sde;
  Rng rng(4);
  const Matrix batch = rng.normal_matrix(9, 2);
  const DsmDraws d = draw_dsm(sde, 9, 2, rng);
  const DsmEval e = dsm_loss(s, p, sde, batch, d);

  double expected = 0.0;
  for (Eigen::Index r = 0; r < 9; ++r) {
    const KernelParams k = perturbation_kernel(sde, d.times(r));
    const Matrix x_t = k.mean_coeff * batch.row(r) + k.std * d.noise.row(r);
    const Matrix score = forward(s, p, x_t, d.times(r));
    // std^2 ||S - (-z/std)||^2
    expected += k.std * k.std * (score + d.noise.row(r) / k.std).squaredNorm();
  }
  CHECK(e.loss == doctest::Approx(expected / 9.0).epsilon(1e-12));
  CHECK(d.times.minCoeff() > sde.t_min);
  CHECK(d.times.maxCoeff() <= 1.0);
}

TEST_CASE("zero network gives loss near the data dimension") {
  const NetSpec s = small_spec(LayerType::Concat, Activation::ReLU, 3);
  const Params zero(param_layout(s).size, 0.0);
  Rng rng(8);
  const Matrix batch = rng.normal_matrix(10000, 3);
  const DsmEval e = dsm_loss(s, zero, SdeConfig{}, batch, rng);
  CHECK(e.loss == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("loss is deterministic for a fixed seed") {
  const NetSpec s = small_spec(LayerType::Squash, Activation::LeakyReLU, 2);
  const Params p = init_params(s, 2);
  Rng data(1);
  const Matrix batch = data.normal_matrix(32, 2);
  Rng a(77), b(77);
  CHECK(dsm_loss(s, p, SdeConfig{}, batch, a).loss == dsm_loss(s, p, SdeConfig{}, batch, b).loss);
}

TEST_CASE("exact-score network has zero loss and zero gradient") {
  // Constant output c; choose z = -std(t) c so every residual vanishes.
  const NetSpec s = small_spec(LayerType::Concat, Activation::SoftPlus, 2);
  const ParamLayout layout = param_layout(s);
  Params p = init_params(s, 3);
  std::fill(p.begin() + static_cast<std::ptrdiff_t>(layout.output.weight),
            p.begin() + static_cast<std::ptrdiff_t>(layout.output.weight + 2 * layout.output.in_width), 0.0);
  p[layout.output.bias] = 0.7;
  p[layout.output.bias + 1] = -1.3;

  const SdeConfig sde;
  Rng rng(5);
  const Matrix batch = rng.normal_matrix(16, 2);
  DsmDraws d = draw_dsm(sde, 16, 2, rng);
  for (Eigen::Index r = 0; r < 16; ++r) {
    const double std = perturbation_kernel(sde, d.times(r)).std;
    d.noise(r, 0) = -std * 0.7;
    d.noise(r, 1) = std * 1.3;
  }
  const DsmEval e = dsm_loss(s, p, sde, batch, d);
  CHECK(e.loss < 1e-20);
  const auto g = dsm_grad(s, p, e);
  double norm = 0.0;
  for (double v : g) norm += v * v;
  CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("dsm gradient matches central differences") {
  for (auto lt : {LayerType::Squash, LayerType::Concat, LayerType::Concatsquash}) {
    for (auto act : {Activation::ReLU, Activation::LeakyReLU, Activation::SoftPlus}) {
      CAPTURE(to_string(lt));
      CAPTURE(to_string(act));
      const NetSpec s = small_spec(lt, act, 2);
      Params p = init_params(s, 21);
      Rng rng(13);
      for (auto& v : p) v += 0.05 * rng.normal();
      const SdeConfig sde;
      const Matrix batch = rng.normal_matrix(8, 2);
      const DsmDraws d = draw_dsm(sde, 8, 2, rng);
      const auto g = dsm_grad(s, p, dsm_loss(s, p, sde, batch, d));
      auto loss = [&](const std::vector<double>& q) { return dsm_loss(s, q, sde, batch, d).loss; };
      double worst = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k)
        worst = std::max(worst, oracle::relative_error(g[k], oracle::central_difference(loss, p, k, 1e-4)));
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("duplicating the batch leaves the gradient unchanged") {
  const NetSpec s = small_spec(LayerType::Concatsquash, Activation::LeakyReLU, 2);
  const Params p = init_params(s, 6);
  const SdeConfig sde;
  Rng rng(3);
  const Matrix batch = rng.normal_matrix(10, 2);
  const DsmDraws d = draw_dsm(sde, 10, 2, rng);
  Matrix batch2(20, 2);
  batch2 << batch, batch;
  DsmDraws d2{Vector(20), Matrix(20, 2)};
  d2.times << d.times, d.times;
  d2.noise << d.noise, d.noise;
  const auto g1 = dsm_grad(s, p, dsm_loss(s, p, sde, batch, d));
  const auto g2 = dsm_grad(s, p, dsm_loss(s, p, sde, batch2, d2));
  for (std::size_t k = 0; k < g1.size(); ++k) CHECK(g2[k] == doctest::Approx(g1[k]).epsilon(1e-12));
}

TEST_CASE("stale cache is rejected") {
  const NetSpec s = small_spec(LayerType::Concat, Activation::ReLU, 2);
  Params p = init_params(s, 6);
  Rng rng(3);
  const DsmEval e = dsm_loss(s, p, SdeConfig{}, rng.normal_matrix(4, 2), rng);
  p[0] += 1e-3;
  CHECK_THROWS_AS(dsm_grad(s, p, e), StaleCacheError);
}

TEST_CASE("adam step") {
  SUBCASE("first step moves by about lr against the gradient") {
    Params p{1.0, -2.0, 0.5};
    AdamState st(3);
    adam_step(p, {1.0, -3.0, 0.25}, st, 0.01);
    CHECK(p[0] == doctest::Approx(1.0 - 0.01 / (1 + 1e-8)));
    CHECK(p[1] == doctest::Approx(-2.0 + 0.01));
    CHECK(p[2] == doctest::Approx(0.5 - 0.01));
    CHECK(st.step == 1);
  }
  SUBCASE("zero gradient is a fixed point") {
    Params p{1.0, 2.0};
    AdamState st(2);
    adam_step(p, {0.0, 0.0}, st, 0.1);
    CHECK(p == Params{1.0, 2.0});
  }
  SUBCASE("matches a hand-rolled second step") {
    Params p{0.0};
    AdamState st(1);
    adam_step(p, {2.0}, st, 0.1);
    adam_step(p, {-1.0}, st, 0.1);
    const double m = 0.9 * (0.1 * 2.0) + 0.1 * -1.0, v = 0.999 * (0.001 * 4.0) + 0.001 * 1.0;
    const double step2 = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
    CHECK(p[0] == doctest::Approx(-0.1 / (1 + 1e-8 / 2.0) - step2));
  }
}

TEST_CASE("train_class") {
  const SdeConfig sde;
  SUBCASE("zero epochs returns the initialization") {
    const NetSpec s = small_spec(LayerType::Concat, Activation::ReLU, 2);
    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 9;
    Rng rng(1);
    const auto r = train_class(rng.normal_matrix(20, 2), s, sde, cfg);
    CHECK(r.params == init_params(s, 9));
    CHECK(r.log.empty());
  }
  SUBCASE("loss decreases (median over three seeds)") {
    const NetSpec s = small_spec(LayerType::Concatsquash, Activation::LeakyReLU, 2);
    std::vector<double> gains;
    for (std::uint64_t seed : {1, 2, 3}) {
      Rng rng(seed + 100);
      const Matrix rows = (0.3 * rng.normal_matrix(500, 2)).array() + 0.5;
      TrainConfig cfg;
      cfg.epochs = 30;
      cfg.batch_size = 64;
      cfg.seed = seed;
      const auto r = train_class(rows, s, sde, cfg);
      REQUIRE(r.log.size() == 30);
      gains.push_back(r.log.front().mean_loss - r.log.back().mean_loss);
    }
    std::sort(gains.begin(), gains.end());
    CHECK(gains[1] > 0.0);
  }
  SUBCASE("score points toward an all-zero data set") {
    NetSpec s = small_spec(LayerType::Concat, Activation::LeakyReLU, 1);
    s.hidden_dims = {32, 32};
    TrainConfig cfg;
    cfg.epochs = 60;
    cfg.batch_size = 64;
    cfg.seed = 4;
    const auto r = train_class(Matrix::Zero(500, 1), s, sde, cfg);
    Matrix grid(2, 1);
    grid << -1.0, 1.0;
    const Matrix out = forward(s, r.params, grid, 0.5);
    CHECK(out(0, 0) > 0.0);
    CHECK(out(1, 0) < 0.0);
  }
  SUBCASE("bit-identical for a fixed seed") {
    const NetSpec s = small_spec(LayerType::Squash, Activation::SoftPlus, 2);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 16;
    cfg.seed = 12;
    Rng rng(2);
    const Matrix rows = rng.normal_matrix(50, 2);
    CHECK(train_class(rows, s, sde, cfg).params == train_class(rows, s, sde, cfg).params);
  }
  SUBCASE("empty rows rejected") {
    CHECK_THROWS_AS(train_class(Matrix(0, 2), small_spec(LayerType::Concat, Activation::ReLU, 2), sde, TrainConfig{}),
                    DataError);
  }
}

TEST_CASE("config validation and loss log") {
  TrainConfig c;
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);

  const auto path = std::filesystem::temp_directory_path() / "sos_loss_log.csv";
  write_loss_log({{1, 0.5, 0.01}, {2, 0.25, 0.02}}, path.string());
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "epoch,mean_loss,wall_seconds");
  CHECK(first.rfind("1,0.5,", 0) == 0);
  std::filesystem::remove(path);
}
