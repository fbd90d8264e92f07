#include "sos/sampling.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "sos/error.hpp"
#include "sos/log.hpp"

namespace sos {

using nlohmann::json;

ScoreFn network_score(const NetSpec& spec, const Params& params) {
  return [spec, params](const Matrix& x, double t) { return forward(spec, params, x, t); };
}

ScoreFn gaussian_score(const SdeConfig& cfg, double data_mean, double data_std) {
  return [cfg, data_mean, data_std](const Matrix& x, double t) -> Matrix {
    const KernelParams k = perturbation_kernel(cfg, t);
    const double var = k.mean_coeff * k.mean_coeff * data_std * data_std + k.std * k.std;
    return -(x.array() - k.mean_coeff * data_mean).matrix() / var;
  };
}

std::string to_string(Predictor p) {
  switch (p) {
    case Predictor::EulerMaruyama:
      return "em";
    case Predictor::AncestralSampling:
      return "ancestral";
    case Predictor::ReverseDiffusion:
      return "reverse_diffusion";
    case Predictor::ProbabilityFlow:
      return "probability_flow";
  }
  return "?";
}

std::string to_string(Corrector c) { return c == Corrector::Langevin ? "langevin" : "none"; }

Predictor predictor_from_string(const std::string& s) {
  if (s == "em" || s == "euler_maruyama") return Predictor::EulerMaruyama;
  if (s == "ancestral" || s == "as" || s == "ancestral_sampling") return Predictor::AncestralSampling;
  if (s == "reverse_diffusion" || s == "rd") return Predictor::ReverseDiffusion;
  if (s == "probability_flow" || s == "pf") return Predictor::ProbabilityFlow;
  throw ConfigError("unknown predictor '" + s + "'");
}

Corrector corrector_from_string(const std::string& s) {
  if (s == "none") return Corrector::None;
  if (s == "langevin") return Corrector::Langevin;
  throw ConfigError("unknown corrector '" + s + "'");
}

void SamplerConfig::validate() const {
  if (steps < 1) throw ConfigError("sampler steps must be >= 1");
  if (corrector == Corrector::Langevin && !(snr > 0.0)) throw ConfigError("snr must be > 0");
  if (!(t_end > 0.0 && t_end <= 1.0)) throw ConfigError("t_end must lie in (0, 1]");
}

json SamplerConfig::to_json() const {
  return json{{"predictor", to_string(predictor)}, {"corrector", to_string(corrector)},
              {"snr", snr},                        {"steps", steps},
              {"corrector_steps", corrector_steps}, {"t_end", t_end},
              {"seed", seed}};
}

SamplerConfig SamplerConfig::from_json(const json& j) {
  SamplerConfig c;
  try {
    c.predictor = predictor_from_string(j.value("predictor", std::string("em")));
    c.corrector = corrector_from_string(j.value("corrector", std::string("none")));
    c.snr = j.value("snr", c.snr);
    c.steps = j.value("steps", c.steps);
    c.corrector_steps = j.value("corrector_steps", c.corrector_steps);
    c.t_end = j.value("t_end", c.t_end);
    c.seed = j.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("sampler config: ") + e.what());
  }
  c.validate();
  return c;
}

Matrix forward_perturb(const SdeConfig& cfg, const Matrix& x0, double t_end, Rng& rng) {
  const KernelParams k = perturbation_kernel(cfg, t_end);
  return k.mean_coeff * x0 + k.std * rng.normal_matrix(x0.rows(), x0.cols());
}

Matrix euler_maruyama_update(const Matrix& x, const Matrix& f, double g, const Matrix& s, double dt, const Matrix& z) {
  return x - (f - g * g * s) * dt + g * std::sqrt(dt) * z;
}

Matrix probability_flow_update(const Matrix& x, const Matrix& f, double g, const Matrix& s, double dt) {
  return x - (f - 0.5 * g * g * s) * dt;
}

namespace {

void require_ancestral_support(const SdeConfig& cfg) {
  if (cfg.family == SdeFamily::SubVP)
    throw UnsupportedCombinationError("ancestral sampling is undefined for the Sub-VP SDE");
}

}  // namespace

Matrix predictor_step(Predictor kind, const SdeConfig& cfg, const ScoreFn& score, const Matrix& x, double t_cur,
                      double t_next, Rng& rng) {
  if (!(t_cur > t_next)) throw NumericError("predictor step needs t_cur > t_next");
  if (kind == Predictor::AncestralSampling) require_ancestral_support(cfg);
  const double dt = t_cur - t_next;
  const Matrix s = score(x, t_cur);
  if (s.rows() != x.rows() || s.cols() != x.cols()) throw DimensionMismatchError("score shape != x shape");

  switch (kind) {
    case Predictor::EulerMaruyama: {
      const Matrix f = drift_coeff(cfg, t_cur) * x;
      const double g = diffusion(cfg, t_cur);
      return euler_maruyama_update(x, f, g, s, dt, rng.normal_matrix(x.rows(), x.cols()));
    }
    case Predictor::ProbabilityFlow: {
      const Matrix f = drift_coeff(cfg, t_cur) * x;
      return probability_flow_update(x, f, diffusion(cfg, t_cur), s, dt);
    }
    case Predictor::ReverseDiffusion: {
      // Discrete view of the forward SDE between t_next and t_cur:
      //   x_cur = a x_next + G z,  a = m(t_cur)/m(t_next),  G^2 = std^2(t_cur) - a^2 std^2(t_next),
      // i.e. discrete drift f_i = (a - 1) x and discrete diffusion G. This is the exact
      // Gaussian transition of each family; for VE it reduces to G^2 = sigma_i^2 - sigma_{i-1}^2
      // and for VP to the usual 1 - a^2 ~ beta(t) dt.
      const KernelParams k_cur = perturbation_kernel(cfg, t_cur);
      const KernelParams k_next = perturbation_kernel(cfg, t_next);
      const double a = k_cur.mean_coeff / k_next.mean_coeff;
      const double g2 = std::max(0.0, k_cur.std * k_cur.std - a * a * k_next.std * k_next.std);
      const Matrix f = (a - 1.0) * x;
      return x - f + g2 * s + std::sqrt(g2) * rng.normal_matrix(x.rows(), x.cols());
    }
    case Predictor::AncestralSampling: {
      if (cfg.family == SdeFamily::VE) {
        const double s2_cur = std::pow(cfg.sigma(t_cur), 2);
        const double s2_next = std::pow(cfg.sigma(t_next), 2);
        const double d = s2_cur - s2_next;
        return x + d * s + std::sqrt(d * s2_next / s2_cur) * rng.normal_matrix(x.rows(), x.cols());
      }
      const double beta_i = cfg.beta(t_cur) * dt;
      if (!(beta_i < 1.0))
        throw NumericError("ancestral step needs beta(t) dt < 1; increase the number of steps");
      return (x + beta_i * s) / std::sqrt(1.0 - beta_i) + std::sqrt(beta_i) * rng.normal_matrix(x.rows(), x.cols());
    }
  }
  return x;
}

CorrectorResult corrector_step(const SdeConfig& cfg, const ScoreFn& score, const Matrix& x, double t, double snr,
                               std::size_t steps, Rng& rng) {
  if (cfg.family == SdeFamily::SubVP)
    throw UnsupportedCombinationError("the Langevin corrector is not used with the Sub-VP SDE");
  const double alpha = cfg.family == SdeFamily::VE ? 1.0 : 1.0 - cfg.beta(t) / static_cast<double>(steps);
  if (!(alpha > 0.0)) throw NumericError("Langevin step needs beta(t) / T < 1; increase the number of steps");
  const Matrix s = score(x, t);
  const Matrix z = rng.normal_matrix(x.rows(), x.cols());
  CorrectorResult out{x, 0};
  // Step size from batch-mean norms over the rows with a usable score; a per-row
  // ratio is unbounded wherever a single score happens to vanish.
  double s_sum = 0.0, z_sum = 0.0;
  std::size_t active = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double s_norm = s.row(i).norm();
    if (s_norm == 0.0) {
      ++out.skipped_rows;
      continue;
    }
    s_sum += s_norm;
    z_sum += z.row(i).norm();
    ++active;
  }
  if (active == 0) return out;
  const double ratio = snr * z_sum / s_sum;
  const double eps = 2.0 * alpha * ratio * ratio;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (s.row(i).norm() != 0.0) out.x.row(i) += eps * s.row(i) + std::sqrt(2.0 * eps) * z.row(i);
  if (out.skipped_rows > 0)
    log::debug("corrector skipped " + std::to_string(out.skipped_rows) + " rows with zero score");
  return out;
}

SolveResult reverse_solve(const SdeConfig& cfg, const ScoreFn& score, const Matrix& x_T, const SamplerConfig& sampler,
                          Rng& rng, double t_start) {
  sampler.validate();
  if (sampler.predictor == Predictor::AncestralSampling) require_ancestral_support(cfg);
  const double start = t_start < 0.0 ? cfg.t_max : t_start;
  if (!(start > cfg.t_min && start <= cfg.t_max)) throw TimeOutOfRangeError(start);

  bool use_corrector = sampler.corrector == Corrector::Langevin && sampler.corrector_steps > 0;
  if (use_corrector && sampler.predictor == Predictor::ProbabilityFlow) {
    log::notice("probability-flow predictor is deterministic; corrector ignored");
    use_corrector = false;
  }
  if (use_corrector && cfg.family == SdeFamily::SubVP) {
    log::notice("Sub-VP runs predictor-only; corrector ignored");
    use_corrector = false;
  }

  SolveResult result;
  result.x = x_T;
  const double h = (start - cfg.t_min) / static_cast<double>(sampler.steps);
  result.times.push_back(start);
  for (std::size_t i = 0; i < sampler.steps; ++i) {
    const double t_cur = start - static_cast<double>(i) * h;
    const double t_next = i + 1 == sampler.steps ? cfg.t_min : start - static_cast<double>(i + 1) * h;
    result.x = predictor_step(sampler.predictor, cfg, score, result.x, t_cur, t_next, rng);
    ++result.predictor_steps;
    if (use_corrector) {
      for (std::size_t c = 0; c < sampler.corrector_steps; ++c) {
        result.x = corrector_step(cfg, score, result.x, t_next, sampler.snr, sampler.steps, rng).x;
        ++result.corrector_steps;
      }
    }
    result.times.push_back(t_next);
  }
  if (!result.x.allFinite()) throw NumericError("reverse solve produced non-finite values");
  return result;
}

}  // namespace sos
