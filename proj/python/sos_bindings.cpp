// Python bindings: numeric building blocks plus the command-line entry point.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "sos/cli.hpp"
#include "sos/error.hpp"
#include "sos/eval.hpp"
#include "sos/finetune.hpp"
#include "sos/sampling.hpp"
#include "sos/sde.hpp"
#include "sos/training.hpp"

namespace py = pybind11;
using namespace sos;

namespace {

SdeConfig make_sde(const std::string& family, double beta_min, double beta_max, double sigma_min, double sigma_max) {
  SdeConfig c;
  c.family = sde_family_from_string(family);
  c.beta_min = beta_min;
  c.beta_max = beta_max;
  c.sigma_min = sigma_min;
  c.sigma_max = sigma_max;
  c.validate();
  return c;
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sos");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  py::gil_scoped_release release;
  return cli_dispatch(static_cast<int>(args.size()), argv.data());
}

}  // namespace

PYBIND11_MODULE(_sos, m) {
  m.doc() = "Score-based oversampling for imbalanced tabular data";

  static py::exception<Error> base(m, "SosError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(base, e.what());
    }
  });

  py::class_<SdeConfig>(m, "SdeConfig")
      .def(py::init(&make_sde), py::arg("family") = "vp", py::arg("beta_min") = 0.1, py::arg("beta_max") = 20.0,
           py::arg("sigma_min") = 0.01, py::arg("sigma_max") = 10.0)
      .def_readwrite("t_min", &SdeConfig::t_min)
      .def_property_readonly("family", [](const SdeConfig& c) { return to_string(c.family); })
      .def("beta_integral", &SdeConfig::beta_integral)
      .def("kernel",
           [](const SdeConfig& c, double t) {
             const KernelParams k = perturbation_kernel(c, t);
             return py::make_tuple(k.mean_coeff, k.std);
           },
           "(mean_coeff, std) of the perturbation kernel at time t")
      .def("diffusion", [](const SdeConfig& c, double t) { return diffusion(c, t); })
      .def("prior_std", [](const SdeConfig& c) { return prior_std(c); });

  m.def(
      "sample_prior",
      [](const SdeConfig& c, std::size_t dim, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return sample_prior(c, static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n), rng);
      },
      py::arg("sde"), py::arg("dim"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "sample_gaussian",
      [](const SdeConfig& c, double mean, double std, std::size_t n, const std::string& predictor, std::size_t steps,
         std::uint64_t seed) {
        SamplerConfig s;
        s.predictor = predictor_from_string(predictor);
        s.steps = steps;
        Rng rng(seed);
        const Matrix x_T = sample_prior(c, 1, static_cast<Eigen::Index>(n), rng);
        return reverse_solve(c, gaussian_score(c, mean, std), x_T, s, rng).x;
      },
      py::arg("sde"), py::arg("mean"), py::arg("std"), py::arg("n"), py::arg("predictor") = "probability_flow",
      py::arg("steps") = 200, py::arg("seed") = 0,
      "Reverse-solve from the prior with the exact score of 1-D data N(mean, std^2).");

  m.def(
      "train_and_sample",
      [](const Matrix& rows, const SdeConfig& c, std::size_t n, std::size_t epochs, std::size_t steps,
         std::uint64_t seed) {
        NetSpec spec;
        spec.input_dim = static_cast<std::size_t>(rows.cols());
        TrainConfig tc;
        tc.epochs = epochs;
        tc.seed = seed;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train_class(rows, spec, c, tc);
        }
        SamplerConfig s;
        s.steps = steps;
        Rng rng(seed, 1);
        const Matrix x_T = sample_prior(c, rows.cols(), static_cast<Eigen::Index>(n), rng);
        std::vector<double> losses;
        for (const auto& e : r.log) losses.push_back(e.mean_loss);
        return py::make_tuple(reverse_solve(c, network_score(spec, r.params), x_T, s, rng).x, losses);
      },
      py::arg("rows"), py::arg("sde"), py::arg("n"), py::arg("epochs") = 100, py::arg("steps") = 50,
      py::arg("seed") = 0, "Train one score network on `rows`, then draw `n` rows. Returns (samples, loss per epoch).");

  m.def("angle_degrees", &angle_degrees, py::arg("g1"), py::arg("g2"));
  m.def(
      "weighted_f1", [](const Labels& t, const Labels& p) { return weighted_f1(t, p); }, py::arg("y_true"),
      py::arg("y_pred"));
  m.def(
      "smote",
      [](const Matrix& minor, std::size_t k, std::size_t n, std::uint64_t seed) {
        Rng rng(seed);
        return smote(minor, k, n, rng);
      },
      py::arg("minor_rows"), py::arg("k"), py::arg("n"), py::arg("seed") = 0);

  m.def("main", &run_cli, py::arg("args"), "Run the command line with `args` (without the program name).");
  m.attr("CONFIG_ENV_VAR") = kConfigEnvVar;
}
