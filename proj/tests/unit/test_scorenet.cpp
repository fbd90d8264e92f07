#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "sos/error.hpp"
#include "sos/rng.hpp"
#include "sos/scorenet.hpp"

using namespace sos;

namespace {

NetSpec spec_of(LayerType lt, Activation act, std::vector<std::size_t> dims, std::size_t input_dim) {
  NetSpec s;
  s.layer_type = lt;
  s.activation = act;
  s.hidden_dims = std::move(dims);
  s.input_dim = input_dim;
  return s;
}

void fill(Params& p, std::size_t offset, std::size_t n, double v) {
  if (offset == LayerOffsets::kAbsent) return;
  std::fill(p.begin() + static_cast<std::ptrdiff_t>(offset), p.begin() + static_cast<std::ptrdiff_t>(offset + n), v);
}

}  // namespace

TEST_CASE("hand-evaluated concat network") {
  const NetSpec s = spec_of(LayerType::Concat, Activation::ReLU, {1}, 1);
  const ParamLayout layout = param_layout(s);
  CHECK(layout.size == 6);
  Params p(layout.size, 0.0);
  fill(p, layout.hidden[0].weight, 2, 1.0);
  fill(p, layout.output.weight, 2, 1.0);
  Vector x(1);
  x << 1.0;
  CHECK(forward(s, p, x, 0.5)(0) == doctest::Approx(2.5));
}

TEST_CASE("concat layer with zero weights outputs its bias") {
  const NetSpec s = spec_of(LayerType::Concat, Activation::ReLU, {3}, 2);
  const ParamLayout layout = param_layout(s);
  Params p = init_params(s, 1);
  fill(p, layout.hidden[0].weight, 3 * 3, 0.0);
  for (std::size_t k = 0; k < 3; ++k) p[layout.hidden[0].bias + k] = 0.25 * static_cast<double>(k + 1);
  Rng rng(5);
  const Matrix x = rng.normal_matrix(4, 2);
  Vector t(4);
  t << 0.1, 0.4, 0.7, 1.0;
  ForwardCache cache;
  forward(s, p, x, t, &cache);
  for (Eigen::Index r = 0; r < 4; ++r)
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(cache.layers[0].pre(r, k) == doctest::Approx(0.25 * (k + 1)));
}

TEST_CASE("squash gate is one half when the time branch is zero") {
  const NetSpec s = spec_of(LayerType::Squash, Activation::ReLU, {2}, 2);
  const ParamLayout layout = param_layout(s);
  Params p = init_params(s, 3);
  fill(p, layout.hidden[0].time_weight, 2, 0.0);
  fill(p, layout.hidden[0].time_bias, 2, 0.0);
  Rng rng(1);
  const Matrix x = rng.normal_matrix(3, 2);
  ForwardCache cache;
  forward(s, p, x, Vector::Constant(3, 0.3), &cache);
  CHECK((cache.layers[0].gate.array() - 0.5).abs().maxCoeff() < 1e-15);
  const Matrix expected = 0.5 * cache.layers[0].linear;
  CHECK((cache.layers[0].pre.leftCols(2) - expected).norm() < 1e-12);
}

TEST_CASE("layer widths grow by concatenation") {
  const NetSpec s = spec_of(LayerType::Concatsquash, Activation::SoftPlus, {4, 5, 3}, 2);
  const ParamLayout layout = param_layout(s);
  REQUIRE(layout.hidden.size() == 3);
  CHECK(layout.hidden[0].in_width == 2);
  CHECK(layout.hidden[1].in_width == 6);
  CHECK(layout.hidden[2].in_width == 11);
  CHECK(layout.output.in_width == 14);
  CHECK(layout.output.out_width == 2);
  // FC + two time branches per hidden layer, then the output FC.
  std::size_t expected = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t in = layout.hidden[i].in_width, out = layout.hidden[i].out_width;
    expected += out * in + out + 2 * (out + out);
  }
  expected += 2 * 14 + 2;
  CHECK(layout.size == expected);

  const nlohmann::json d = describe_layout(s);
  CHECK(d.at("size") == layout.size);
  REQUIRE(d.at("hidden").size() == 3);
  CHECK(d.at("hidden")[0].size() == 6);
  CHECK(d.at("hidden")[0][4].at("name") == "fc_bias.weight");
  CHECK(d.at("hidden")[0][4].at("offset") == layout.hidden[0].time2_weight);
}

TEST_CASE("parameter counts per layer type") {
  // input 3, one hidden layer of width 4.
  CHECK(param_layout(spec_of(LayerType::Concat, Activation::ReLU, {4}, 3)).size == 4 * 4 + 4 + 3 * 7 + 3);
  CHECK(param_layout(spec_of(LayerType::Squash, Activation::ReLU, {4}, 3)).size == 4 * 3 + 4 + 4 + 4 + 3 * 7 + 3);
  CHECK(param_layout(spec_of(LayerType::Concatsquash, Activation::ReLU, {4}, 3)).size ==
        4 * 3 + 4 + 2 * (4 + 4) + 3 * 7 + 3);
}

TEST_CASE("glorot-uniform init with zero biases") {
  const NetSpec s = spec_of(LayerType::Squash, Activation::ReLU, {3}, 3);
  const ParamLayout layout = param_layout(s);
  const Params p = init_params(s, 11);
  const double a = std::sqrt(6.0 / (3 + 3));
  CHECK(a == doctest::Approx(1.0));
  for (std::size_t k = 0; k < 9; ++k) CHECK(std::abs(p[layout.hidden[0].weight + k]) <= a);
  for (std::size_t k = 0; k < 3; ++k) CHECK(p[layout.hidden[0].bias + k] == 0.0);
  CHECK(init_params(s, 11) == p);
  CHECK(init_params(s, 12) != p);

  // Variance of U(-a, a) is a^2 / 3.
  const NetSpec wide = spec_of(LayerType::Squash, Activation::ReLU, {200}, 200);
  const ParamLayout wl = param_layout(wide);
  const Params wp = init_params(wide, 2);
  double sq = 0.0;
  for (std::size_t k = 0; k < 200 * 200; ++k) sq += wp[wl.hidden[0].weight + k] * wp[wl.hidden[0].weight + k];
  const double bound = std::sqrt(6.0 / 400.0);
  CHECK(sq / (200 * 200) == doctest::Approx(bound * bound / 3.0).epsilon(0.03));
}

TEST_CASE("forward contract") {
  for (auto lt : {LayerType::Squash, LayerType::Concat, LayerType::Concatsquash}) {
    const NetSpec s = spec_of(lt, Activation::LeakyReLU, {6, 5}, 3);
    const Params p = init_params(s, 4);
    Rng rng(2);
    const Matrix x = rng.normal_matrix(7, 3);
    const Matrix a = forward(s, p, x, 0.4);
    CHECK(a.rows() == 7);
    CHECK(a.cols() == 3);
    CHECK(a == forward(s, p, x, 0.4));
    // Batched and single-row evaluation agree.
    const Vector one = forward(s, p, Vector(x.row(2).transpose()), 0.4);
    CHECK((one.transpose() - a.row(2)).norm() < 1e-12);
    CHECK_THROWS_AS(forward(s, p, Matrix(Matrix::Zero(2, 4)), 0.4), DimensionMismatchError);
    CHECK_THROWS_AS(forward(s, Params(3, 0.0), x, 0.4), DimensionMismatchError);
  }
}

TEST_CASE("backward matches central differences for every layer and activation") {
  for (auto lt : {LayerType::Squash, LayerType::Concat, LayerType::Concatsquash}) {
    for (auto act : {Activation::ReLU, Activation::LeakyReLU, Activation::SoftPlus}) {
      CAPTURE(to_string(lt));
      CAPTURE(to_string(act));
      const NetSpec s = spec_of(lt, act, {5, 4}, 3);
      Params p = init_params(s, 17);
      // Nonzero biases so every parameter carries gradient.
      Rng rng(23);
      for (auto& v : p) v += 0.05 * rng.normal();
      const Matrix x = rng.normal_matrix(6, 3);
      Vector t(6);
      for (Eigen::Index i = 0; i < 6; ++i) t(i) = 0.05 + 0.15 * static_cast<double>(i);
      const Matrix w = rng.normal_matrix(6, 3);

      ForwardCache cache;
      forward(s, p, x, t, &cache);
      const std::vector<double> g = backward(s, p, cache, w);
      auto objective = [&](const std::vector<double>& q) { return forward(s, q, x, t).cwiseProduct(w).sum(); };
      double worst = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k)
        worst = std::max(worst, oracle::relative_error(g[k], oracle::central_difference(objective, p, k, 1e-4)));
      CHECK(worst < 1e-4);
    }
  }
}

TEST_CASE("concatsquash gate and bias branches receive identical gradients") {
  const NetSpec s = spec_of(LayerType::Concatsquash, Activation::SoftPlus, {4}, 2);
  const ParamLayout layout = param_layout(s);
  const Params p = init_params(s, 8);
  Rng rng(9);
  const Matrix x = rng.normal_matrix(5, 2);
  ForwardCache cache;
  forward(s, p, x, Vector::Constant(5, 0.6), &cache);
  const auto g = backward(s, p, cache, rng.normal_matrix(5, 2));
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(g[layout.hidden[0].time_weight + k] == doctest::Approx(g[layout.hidden[0].time2_weight + k]));
    CHECK(g[layout.hidden[0].time_bias + k] == doctest::Approx(g[layout.hidden[0].time2_bias + k]));
  }
}

TEST_CASE("spec validation and names") {
  NetSpec s;
  s.hidden_dims = {};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.hidden_dims = {4, 0};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  const NetSpec ok = spec_of(LayerType::Squash, Activation::SoftPlus, {3, 2}, 4);
  CHECK(NetSpec::from_json(ok.to_json()) == ok);
  CHECK(layer_type_from_string("concatsquash") == LayerType::Concatsquash);
  CHECK(activation_from_string("leaky_relu") == Activation::LeakyReLU);
}
