#pragma once

#include <cstdint>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "sos/rng.hpp"
#include "sos/tabular.hpp"

namespace sos {

using Labels = std::vector<std::size_t>;

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  double weighted_f1 = 0.0;
  double accuracy = 0.0;
  std::map<std::size_t, ClassScores> per_class;
};

/// Per-class scores over the union of true and predicted labels. Undefined
/// precision or recall counts as 0.
Metrics classification_metrics(const Labels& y_true, const Labels& y_pred);
double weighted_f1(const Labels& y_true, const Labels& y_pred);

enum class ClassifierKind { LogisticRegression, MLP };
std::string to_string(ClassifierKind k);
ClassifierKind classifier_from_string(const std::string& s);

/// Fitted classifier: multinomial logistic regression or a one-hidden-layer
/// ReLU MLP, both with a softmax output.
class Classifier {
 public:
  static Classifier train(ClassifierKind kind, const Matrix& x, const Labels& y, std::uint64_t seed);

  Labels predict(const Matrix& x) const;
  Matrix predict_proba(const Matrix& x) const;
  ClassifierKind kind() const noexcept { return kind_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  ClassifierKind kind_ = ClassifierKind::LogisticRegression;
  std::vector<std::size_t> classes_;  // output column -> label
  Matrix w1_;
  RowVector b1_;
  Matrix w2_;  // MLP only
  RowVector b2_;
  std::size_t iterations_ = 0;
};

inline constexpr std::size_t kMlpHidden = 64;
inline constexpr std::size_t kMlpEpochs = 200;
inline constexpr std::size_t kLogisticMaxIterations = 2000;
inline constexpr double kLogisticTolerance = 1e-6;

/// One SMOTE draw: base row, chosen neighbour, interpolation weight.
struct SmoteDraw {
  std::size_t base = 0;
  std::size_t neighbour = 0;
  double lambda = 0.0;
};

/// x + lambda (x' - x).
RowVector smote_interpolate(const RowVector& x, const RowVector& neighbour, double lambda);

/// `n` synthetic rows, each between a minor row and one of its k nearest minor
/// neighbours (Euclidean). Records the draws when `trace` is given.
Matrix smote(const Matrix& minor_rows, std::size_t k, std::size_t n, Rng& rng, std::vector<SmoteDraw>* trace = nullptr);

/// Balances every minor class of `table` with SMOTE, in encoded space.
Table smote_balance(const Table& table, const Encoder& encoder, std::size_t k, std::uint64_t seed);

struct EvalConfig {
  std::vector<ClassifierKind> classifiers{ClassifierKind::LogisticRegression, ClassifierKind::MLP};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  double test_fraction = 0.2;

  void validate() const;
  nlohmann::json to_json() const;
  static EvalConfig from_json(const nlohmann::json& j);
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  std::vector<double> values;
};

MeanStd mean_std(const std::vector<double>& values);

struct EvalSummary {
  std::map<std::string, MeanStd> per_classifier;
  MeanStd overall;
  std::size_t fits = 0;

  nlohmann::json to_json() const;
};

/// Fits every (seed, classifier) pair on the encoded training table and scores
/// weighted F1 on the test table. Invariant to the training row order.
EvalSummary evaluate(const Table& train, const Table& test, const EvalConfig& cfg);

struct HistogramBin {
  double low = 0.0;
  double high = 0.0;
  std::size_t count_real = 0;
  std::size_t count_other = 0;
};

/// Equal-width bins over the real data's [min, max] of a continuous column;
/// values outside the range land in the edge bins.
std::vector<HistogramBin> histogram(const Table& real, const std::string& column, std::size_t bins,
                                    const Table* other = nullptr);
void write_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path);

}  // namespace sos
