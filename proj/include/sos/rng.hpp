#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "sos/types.hpp"

namespace sos {

/// Seeded random stream. Independent streams come from (seed, stream) pairs,
/// so parallel workers never share state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  double normal();
  /// Uniform on [0, 1).
  double uniform();
  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols);

  /// A fresh stream derived from this one's seed.
  Rng derive(std::uint64_t stream) const;

  /// When set, every normal draw is appended to `tape`.
  void record_normals(std::vector<double>* tape) { tape_ = tape; }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::vector<double>* tape_ = nullptr;
};

}  // namespace sos
