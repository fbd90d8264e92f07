#include "sos/training.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"
#include "sos/tabular.hpp"

namespace sos {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
}

json TrainConfig::to_json() const {
  return json{{"batch_size", batch_size}, {"epochs", epochs},        {"learning_rate", learning_rate},
              {"adam_beta1", adam.beta1}, {"adam_beta2", adam.beta2}, {"adam_eps", adam.eps},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam.beta1 = j.value("adam_beta1", c.adam.beta1);
    c.adam.beta2 = j.value("adam_beta2", c.adam.beta2);
    c.adam.eps = j.value("adam_eps", c.adam.eps);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::uint64_t fingerprint(const Params& params) {
  // FNV-1a over the raw bytes.
  std::uint64_t h = 1469598103934665603ULL;
  for (double v : params) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xFF;
      h *= 1099511628211ULL;
    }
  }
  return h ^ params.size();
}

DsmDraws draw_dsm(const SdeConfig& cfg, Eigen::Index rows, Eigen::Index dim, Rng& rng) {
  DsmDraws d;
  d.times.resize(rows);
  for (Eigen::Index i = 0; i < rows; ++i) d.times(i) = cfg.t_min + (cfg.t_max - cfg.t_min) * (1.0 - rng.uniform());
  d.noise = rng.normal_matrix(rows, dim);
  return d;
}

DsmEval dsm_loss(const NetSpec& spec, const Params& params, const SdeConfig& cfg, const Matrix& batch,
                 const DsmDraws& draws) {
  const Eigen::Index n = batch.rows();
  if (n == 0) throw DimensionMismatchError("dsm_loss needs a non-empty batch");
  if (draws.times.size() != n || draws.noise.rows() != n || draws.noise.cols() != batch.cols())
    throw DimensionMismatchError("draws do not match the batch");

  DsmEval eval;
  eval.stds.resize(n);
  Matrix x_t(n, batch.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const KernelParams k = perturbation_kernel(cfg, draws.times(i));
    eval.stds(i) = k.std;
    x_t.row(i) = k.mean_coeff * batch.row(i) + k.std * draws.noise.row(i);
  }
  const Matrix score = forward(spec, params, x_t, draws.times, &eval.forward);
  eval.residual = eval.stds.asDiagonal() * score + draws.noise;
  eval.loss = eval.residual.rowwise().squaredNorm().mean();
  eval.fingerprint = fingerprint(params);
  return eval;
}

DsmEval dsm_loss(const NetSpec& spec, const Params& params, const SdeConfig& cfg, const Matrix& batch, Rng& rng) {
  return dsm_loss(spec, params, cfg, batch, draw_dsm(cfg, batch.rows(), batch.cols(), rng));
}

std::vector<double> dsm_grad(const NetSpec& spec, const Params& params, const DsmEval& eval) {
  if (fingerprint(params) != eval.fingerprint) throw StaleCacheError();
  const double scale = 2.0 / static_cast<double>(eval.residual.rows());
  const Matrix d_out = scale * (eval.stds.asDiagonal() * eval.residual);
  return backward(spec, params, eval.forward, d_out);
}

void adam_step(Params& params, const std::vector<double>& grad, AdamState& state, double lr,
               const AdamHyper& hyper) {
  if (grad.size() != params.size()) throw DimensionMismatchError("gradient length != params length");
  if (state.m.size() != params.size()) state = AdamState(params.size());
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    state.m[k] = hyper.beta1 * state.m[k] + (1.0 - hyper.beta1) * grad[k];
    state.v[k] = hyper.beta2 * state.v[k] + (1.0 - hyper.beta2) * grad[k] * grad[k];
    const double m_hat = state.m[k] / c1;
    const double v_hat = state.v[k] / c2;
    params[k] -= lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

TrainResult train_class(const Matrix& class_rows, const NetSpec& spec, const SdeConfig& sde,
                        const TrainConfig& cfg, const Params& init) {
  cfg.validate();
  if (class_rows.rows() == 0) throw DataError("train_class needs at least one row");
  if (static_cast<std::size_t>(class_rows.cols()) != spec.input_dim)
    throw DimensionMismatchError("class rows width != net input_dim");

  TrainResult result;
  result.params = init.empty() ? init_params(spec, cfg.seed) : init;
  AdamState adam(result.params.size());
  Rng rng(cfg.seed, 0x7EA1);

  const auto n = static_cast<std::size_t>(class_rows.rows());
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    double loss_sum = 0.0;
    for (std::size_t lo = 0; lo < n; lo += cfg.batch_size) {
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      Matrix batch(static_cast<Eigen::Index>(hi - lo), class_rows.cols());
      for (std::size_t r = lo; r < hi; ++r) batch.row(static_cast<Eigen::Index>(r - lo)) = class_rows.row(order[r]);
      const DsmEval eval = dsm_loss(spec, result.params, sde, batch, rng);
      if (!std::isfinite(eval.loss)) throw NumericError("training loss diverged at epoch " + std::to_string(epoch));
      loss_sum += eval.loss * static_cast<double>(hi - lo);
      adam_step(result.params, dsm_grad(spec, result.params, eval), adam, cfg.learning_rate, cfg.adam);
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    result.log.push_back(EpochLog{epoch, loss_sum / static_cast<double>(n), wall.count()});
  }
  return result;
}

void write_loss_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "epoch,mean_loss,wall_seconds\n";
  for (const auto& e : log) out << e.epoch << ',' << format_real(e.mean_loss) << ',' << format_real(e.wall_seconds) << '\n';
}

}  // namespace sos
