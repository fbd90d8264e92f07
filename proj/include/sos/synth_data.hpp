#pragma once

#include <cstdint>
#include <string>

#include "sos/tabular.hpp"

namespace sos {

/// Desk-scale stand-ins for real imbalanced datasets.
enum class SynthKind { TwoGaussImbalanced, MultiMinor, Gauss1d };
SynthKind synth_kind_from_string(const std::string& s);
std::string to_string(SynthKind k);

struct SynthParams {
  // two_gauss_imbalanced: major ~ N(0, I), minor ~ N((delta, delta), minor_scale^2 I).
  std::size_t major = 2000;
  std::size_t minor = 200;
  double delta = 1.1;
  double minor_scale = 0.2;
  // multi_minor: one major and two minors, Buddy-like 3-class shape scaled down.
  std::size_t minor2 = 117;
  // gauss1d: one column ~ N(mean, std^2).
  double mean = 2.0;
  double std = 0.5;
  std::size_t rows = 5000;

  double test_fraction = 0.2;
};

/// The full generated table, before any split. Deterministic in `seed`.
Table generate_table(SynthKind kind, const SynthParams& params, std::uint64_t seed);

/// Per-class split: round(test_fraction * |class|) rows go to test.
std::pair<Table, Table> stratified_split(const Table& table, double test_fraction, std::uint64_t seed);

struct SynthDataset {
  Table full;
  Table train;
  Table test;
};

SynthDataset make_synth(SynthKind kind, const SynthParams& params, std::uint64_t seed);

}  // namespace sos
