#include <atomic>
#include <iostream>

#include "sos/error.hpp"
#include "sos/log.hpp"
#include "sos/rng.hpp"

namespace sos {

int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::Config:
      return 2;
    case ErrorCategory::Data:
      return 3;
    case ErrorCategory::MissingArtifact:
      return 4;
    case ErrorCategory::Numeric:
      return 5;
  }
  return 1;
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  engine_.seed(seq);
}

double Rng::normal() {
  const double z = normal_(engine_);
  if (tape_ != nullptr) tape_->push_back(z);
  return z;
}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

std::size_t Rng::index(std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal();
  return m;
}

Rng Rng::derive(std::uint64_t stream) const {
  // Mix the parent stream in so derive(a).derive(b) != derive(b).derive(a).
  return Rng(seed_, stream_ * 0x9E3779B97F4A7C15ULL + stream + 1);
}

namespace log {
namespace {
std::atomic<Level> g_level{Level::Quiet};
}

void set_level(Level l) { g_level = l; }
Level level() { return g_level; }

void info(std::string_view message) {
  if (g_level >= Level::Info) std::clog << "[sos] " << message << '\n';
}
void notice(std::string_view message) {
  if (g_level >= Level::Info) std::clog << "[sos] notice: " << message << '\n';
}
void debug(std::string_view message) {
  if (g_level >= Level::Debug) std::clog << "[sos] debug: " << message << '\n';
}
}  // namespace log

}  // namespace sos
