#include "sos/synth_data.hpp"

#include <cmath>

#include "sos/error.hpp"
#include "sos/rng.hpp"

namespace sos {

SynthKind synth_kind_from_string(const std::string& s) {
  if (s == "two_gauss_imbalanced") return SynthKind::TwoGaussImbalanced;
  if (s == "multi_minor") return SynthKind::MultiMinor;
  if (s == "gauss1d") return SynthKind::Gauss1d;
  throw ConfigError("unknown synthetic dataset kind '" + s + "'");
}

std::string to_string(SynthKind k) {
  switch (k) {
    case SynthKind::TwoGaussImbalanced:
      return "two_gauss_imbalanced";
    case SynthKind::MultiMinor:
      return "multi_minor";
    case SynthKind::Gauss1d:
      return "gauss1d";
  }
  return "?";
}

namespace {

// Interleaves class blocks so the CSV is not sorted by label.
std::vector<Row> shuffled(std::vector<Row> rows, Rng& rng) {
  for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng.index(i)]);
  return rows;
}

}  // namespace

Table generate_table(SynthKind kind, const SynthParams& p, std::uint64_t seed) {
  Rng rng(seed, 0x5EED);
  std::vector<Row> rows;
  switch (kind) {
    case SynthKind::TwoGaussImbalanced: {
      if (p.major == 0 || p.minor == 0) throw ConfigError("class counts must be positive");
      if (!(p.minor_scale > 0.0)) throw ConfigError("minor_scale must be positive");
      Schema schema({{"x1", ColumnKind::Continuous}, {"x2", ColumnKind::Continuous}, {"label", ColumnKind::Categorical}},
                    "label");
      for (std::size_t i = 0; i < p.major; ++i) rows.push_back({rng.normal(), rng.normal(), std::string("major")});
      for (std::size_t i = 0; i < p.minor; ++i)
        rows.push_back({p.delta + p.minor_scale * rng.normal(), p.delta + p.minor_scale * rng.normal(),
                        std::string("minor")});
      return Table(schema, shuffled(std::move(rows), rng));
    }
    case SynthKind::MultiMinor: {
      if (p.major == 0 || p.minor == 0 || p.minor2 == 0) throw ConfigError("class counts must be positive");
      Schema schema({{"x1", ColumnKind::Continuous},
                     {"x2", ColumnKind::Continuous},
                     {"grade", ColumnKind::Categorical},
                     {"label", ColumnKind::Categorical}},
                    "label");
      struct Spec {
        const char* label;
        std::size_t n;
        double cx, cy;
        double p_grade[3];
      };
      const Spec specs[] = {{"c0", p.major, 0.0, 0.0, {0.6, 0.3, 0.1}},
                            {"c1", p.minor, 2.0, 0.5, {0.2, 0.5, 0.3}},
                            {"c2", p.minor2, 0.5, 2.0, {0.1, 0.2, 0.7}}};
      const char* grades[] = {"low", "mid", "high"};
      for (const auto& s : specs) {
        for (std::size_t i = 0; i < s.n; ++i) {
          const double u = rng.uniform();
          const std::size_t g = u < s.p_grade[0] ? 0 : (u < s.p_grade[0] + s.p_grade[1] ? 1 : 2);
          rows.push_back({s.cx + rng.normal(), s.cy + rng.normal(), std::string(grades[g]), std::string(s.label)});
        }
      }
      return Table(schema, shuffled(std::move(rows), rng));
    }
    case SynthKind::Gauss1d: {
      if (p.rows == 0) throw ConfigError("row count must be positive");
      Schema schema({{"x", ColumnKind::Continuous}, {"label", ColumnKind::Categorical}}, "label");
      for (std::size_t i = 0; i < p.rows; ++i) rows.push_back({p.mean + p.std * rng.normal(), std::string("a")});
      return Table(schema, std::move(rows));
    }
  }
  throw ConfigError("unknown synthetic dataset kind");
}

std::pair<Table, Table> stratified_split(const Table& table, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  Rng rng(seed, 0x5917);
  std::vector<bool> is_test(table.size(), false);
  for (std::size_t k = 0; k < table.class_labels().size(); ++k) {
    std::vector<std::size_t> idx = table.class_rows(k);
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    for (std::size_t i = 0; i < n_test; ++i) is_test[idx[i]] = true;
  }
  std::vector<Row> train, test;
  for (std::size_t r = 0; r < table.size(); ++r) (is_test[r] ? test : train).push_back(table.rows()[r]);
  return {Table(table.schema(), std::move(train)), Table(table.schema(), std::move(test))};
}

SynthDataset make_synth(SynthKind kind, const SynthParams& params, std::uint64_t seed) {
  Table full = generate_table(kind, params, seed);
  auto [train, test] = stratified_split(full, params.test_fraction, seed);
  return SynthDataset{std::move(full), std::move(train), std::move(test)};
}

}  // namespace sos
