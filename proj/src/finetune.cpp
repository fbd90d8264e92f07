#include "sos/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

#include "sos/error.hpp"
#include "sos/parallel.hpp"
#include "sos/sampling.hpp"

namespace sos {

using nlohmann::json;

void FinetuneConfig::validate() const {
  if (!(xi_degrees >= 0.0 && xi_degrees < 180.0)) throw ConfigError("xi_degrees must lie in [0, 180)");
  if (!(w > 0.0 && w < 1.0)) throw ConfigError("w must lie in (0, 1)");
  if (!(eps_t > 0.0)) throw ConfigError("eps_t must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("fine-tune learning_rate must be > 0");
}

json FinetuneConfig::to_json() const {
  return json{{"xi_degrees", xi_degrees}, {"w", w},     {"eps_t", eps_t}, {"epochs", epochs},
              {"learning_rate", learning_rate}, {"seed", seed}};
}

FinetuneConfig FinetuneConfig::from_json(const json& j) {
  FinetuneConfig c;
  try {
    c.xi_degrees = j.value("xi_degrees", c.xi_degrees);
    c.w = j.value("w", c.w);
    c.eps_t = j.value("eps_t", c.eps_t);
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("finetune config: ") + e.what());
  }
  c.validate();
  return c;
}

double resolve_eps_t(double eps_t, std::size_t steps, const SdeConfig& sde) {
  double t = eps_t;
  if (eps_t >= 1.0 && std::floor(eps_t) == eps_t) {
    if (steps == 0) throw ConfigError("step-index eps_t needs the sampler's step count");
    t = eps_t / static_cast<double>(steps);
  }
  if (!(t >= sde.t_min && t <= sde.t_max)) throw ConfigError("eps_t resolves outside [t_min, 1]");
  return t;
}

double angle_degrees(const Vector& g1, const Vector& g2) {
  if (g1.size() != g2.size()) throw DimensionMismatchError("angle of vectors with different lengths");
  const double n1 = g1.norm();
  const double n2 = g2.norm();
  if (n1 == 0.0 || n2 == 0.0) throw ZeroVectorError();
  // Same value as acos of the clamped cosine, without its loss of precision near 0 and 180.
  const Vector u = g1 / n1, v = g2 / n2;
  return 2.0 * std::atan2((u - v).norm(), (u + v).norm()) * 180.0 / std::numbers::pi;
}

ScoreAt score_at(const NetSpec& spec, const Params& params, const Vector& x, const SdeConfig& sde, double eps_t,
                 Rng& rng) {
  const Matrix row = x.transpose();
  ScoreAt out;
  out.x_t = forward_perturb(sde, row, eps_t, rng).row(0).transpose();
  out.g = forward(spec, params, out.x_t, eps_t);
  return out;
}

double finetune_step(const NetSpec& spec, Params& params, AdamState& adam, const Vector& x_t, double eps_t, double w,
                     double lr) {
  const Matrix row = x_t.transpose();
  const Vector t = Vector::Constant(1, eps_t);
  ForwardCache cache;
  const Matrix s = forward(spec, params, row, t, &cache);
  const Matrix target = w * s;  // frozen
  const Matrix residual = s - target;
  const double loss = residual.squaredNorm();
  adam_step(params, backward(spec, params, cache, 2.0 * residual), adam, lr);
  return loss;
}

FinetuneReport finetune_all(std::vector<ClassNet>& nets, std::size_t major_index, const Matrix& records,
                            const SdeConfig& sde, const FinetuneConfig& cfg, std::size_t sampler_steps,
                            std::size_t threads) {
  cfg.validate();
  if (major_index >= nets.size()) throw ConfigError("major class index out of range");
  const double eps_t = resolve_eps_t(cfg.eps_t, sampler_steps, sde);
  const ClassNet& major = nets[major_index];

  // Shared perturbations and major-class scores, one block per epoch.
  Rng rng(cfg.seed, 0xF17E);
  std::vector<Matrix> perturbed;
  std::vector<Matrix> major_scores;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    perturbed.push_back(forward_perturb(sde, records, eps_t, rng));
    major_scores.push_back(forward(major.spec, major.params, perturbed.back(), eps_t));
  }

  std::vector<std::size_t> minors;
  for (std::size_t k = 0; k < nets.size(); ++k)
    if (k != major_index) minors.push_back(k);

  FinetuneReport report;
  report.triggers_per_class.assign(nets.size(), 0);
  std::vector<std::size_t> skipped(nets.size(), 0);
  std::vector<std::size_t> evaluated(nets.size(), 0);

  auto tune_one = [&](std::size_t k) {
    ClassNet& net = nets[k];
    AdamState adam(net.params.size());
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      for (Eigen::Index r = 0; r < records.rows(); ++r) {
        const Vector x_t = perturbed[e].row(r).transpose();
        const Vector g_major = major_scores[e].row(r).transpose();
        const Vector g_minor = forward(net.spec, net.params, x_t, eps_t);
        ++evaluated[k];
        double angle = 0.0;
        try {
          angle = angle_degrees(g_minor, g_major);
        } catch (const ZeroVectorError&) {
          ++skipped[k];
          continue;
        }
        if (angle < cfg.xi_degrees) {
          finetune_step(net.spec, net.params, adam, x_t, eps_t, cfg.w, cfg.learning_rate);
          ++report.triggers_per_class[k];
        }
      }
    }
  };

  parallel_for(minors.size(), threads, [&](std::size_t i) { tune_one(minors[i]); });

  for (std::size_t k : minors) {
    report.triggers += report.triggers_per_class[k];
    report.skipped += skipped[k];
    report.evaluations += evaluated[k];
  }
  return report;
}

}  // namespace sos
