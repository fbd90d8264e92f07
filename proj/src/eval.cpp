#include "sos/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <nlohmann/json.hpp>
#include <set>

#include "sos/error.hpp"
#include "sos/training.hpp"

namespace sos {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Metrics

Metrics classification_metrics(const Labels& y_true, const Labels& y_pred) {
  if (y_true.size() != y_pred.size())
    throw DataError("label vectors differ in length (" + std::to_string(y_true.size()) + " vs " +
                    std::to_string(y_pred.size()) + ")");
  if (y_true.empty()) throw DataError("metrics need at least one sample");

  std::set<std::size_t> classes(y_true.begin(), y_true.end());
  classes.insert(y_pred.begin(), y_pred.end());
  Metrics m;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) correct += y_true[i] == y_pred[i];
  m.accuracy = static_cast<double>(correct) / static_cast<double>(y_true.size());

  for (std::size_t c : classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      const bool t = y_true[i] == c, p = y_pred[i] == c;
      tp += t && p;
      fp += !t && p;
      fn += t && !p;
    }
    ClassScores s;
    s.support = tp + fn;
    s.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    m.weighted_f1 += static_cast<double>(s.support) / static_cast<double>(y_true.size()) * s.f1;
    m.per_class[c] = s;
  }
  return m;
}

double weighted_f1(const Labels& y_true, const Labels& y_pred) {
  return classification_metrics(y_true, y_pred).weighted_f1;
}

// ---------------------------------------------------------------------------
// Classifiers

std::string to_string(ClassifierKind k) { return k == ClassifierKind::MLP ? "mlp" : "logistic_regression"; }

ClassifierKind classifier_from_string(const std::string& s) {
  if (s == "logistic_regression" || s == "logistic" || s == "lr") return ClassifierKind::LogisticRegression;
  if (s == "mlp") return ClassifierKind::MLP;
  throw ConfigError("unknown classifier '" + s + "'");
}

namespace {

// Row-wise softmax, in place.
void softmax_rows(Matrix& z) {
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    z.row(i).array() -= z.row(i).maxCoeff();
    z.row(i) = z.row(i).array().exp().matrix();
    z.row(i) /= z.row(i).sum();
  }
}

double cross_entropy(const Matrix& proba, const Matrix& onehot) {
  return -(onehot.array() * (proba.array().max(1e-300)).log()).sum() / static_cast<double>(proba.rows());
}

}  // namespace

Classifier Classifier::train(ClassifierKind kind, const Matrix& x, const Labels& y, std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("one label per row required");
  std::set<std::size_t> distinct(y.begin(), y.end());
  if (distinct.size() < 2) throw SingleClassError("classifier needs at least two classes in the training set");

  Classifier c;
  c.kind_ = kind;
  c.classes_.assign(distinct.begin(), distinct.end());
  const auto n = x.rows(), d = x.cols();
  const auto k = static_cast<Eigen::Index>(c.classes_.size());
  Matrix onehot = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto col = std::lower_bound(c.classes_.begin(), c.classes_.end(), y[static_cast<std::size_t>(i)]) - c.classes_.begin();
    onehot(i, col) = 1.0;
  }

  if (kind == ClassifierKind::LogisticRegression) {
    // Full-batch gradient descent with step 1/L, L bounding the loss curvature.
    const double max_sq = (x.rowwise().squaredNorm().array() + 1.0).maxCoeff();
    const double lr = 2.0 / max_sq;
    c.w1_ = Matrix::Zero(d, k);
    c.b1_ = RowVector::Zero(k);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t it = 0; it < kLogisticMaxIterations; ++it) {
      Matrix proba = x * c.w1_;
      proba.rowwise() += c.b1_;
      softmax_rows(proba);
      const double loss = cross_entropy(proba, onehot);
      c.iterations_ = it + 1;
      if (std::abs(previous - loss) < kLogisticTolerance) break;
      previous = loss;
      const Matrix delta = (proba - onehot) / static_cast<double>(n);
      c.w1_ -= lr * (x.transpose() * delta);
      c.b1_ -= lr * delta.colwise().sum();
    }
    return c;
  }

  // MLP: d -> 64 (ReLU) -> k, Adam on minibatches of 64.
  const auto h = static_cast<Eigen::Index>(kMlpHidden);
  Rng rng(seed, 0xC1A5);
  const double a1 = std::sqrt(6.0 / static_cast<double>(d + h));
  const double a2 = std::sqrt(6.0 / static_cast<double>(h + k));
  c.w1_ = Matrix(d, h);
  c.w2_ = Matrix(h, k);
  for (Eigen::Index i = 0; i < c.w1_.size(); ++i) c.w1_.data()[i] = a1 * (2.0 * rng.uniform() - 1.0);
  for (Eigen::Index i = 0; i < c.w2_.size(); ++i) c.w2_.data()[i] = a2 * (2.0 * rng.uniform() - 1.0);
  c.b1_ = RowVector::Zero(h);
  c.b2_ = RowVector::Zero(k);

  // Flatten for the shared Adam routine: [w1, b1, w2, b2].
  const auto sizes = std::array<Eigen::Index, 4>{d * h, h, h * k, k};
  Params flat(static_cast<std::size_t>(sizes[0] + sizes[1] + sizes[2] + sizes[3]));
  std::array<Eigen::Index, 5> offsets{0, 0, 0, 0, 0};
  for (std::size_t i = 0; i < 4; ++i) offsets[i + 1] = offsets[i] + sizes[i];
  const std::array<double*, 4> blocks{c.w1_.data(), c.b1_.data(), c.w2_.data(), c.b2_.data()};
  auto pack = [&] {
    for (std::size_t i = 0; i < 4; ++i) std::copy(blocks[i], blocks[i] + sizes[i], flat.data() + offsets[i]);
  };
  auto unpack = [&] {
    for (std::size_t i = 0; i < 4; ++i)
      std::copy(flat.data() + offsets[i], flat.data() + offsets[i + 1], blocks[i]);
  };
  pack();
  AdamState adam(flat.size());
  constexpr std::size_t batch = 64;
  constexpr double lr = 1e-3;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::vector<double> grad(flat.size());
  for (std::size_t epoch = 0; epoch < kMlpEpochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);
    for (std::size_t lo = 0; lo < order.size(); lo += batch) {
      const std::size_t hi = std::min(order.size(), lo + batch);
      const auto m = static_cast<Eigen::Index>(hi - lo);
      Matrix xb(m, d), yb(m, k);
      for (std::size_t r = lo; r < hi; ++r) {
        xb.row(static_cast<Eigen::Index>(r - lo)) = x.row(order[r]);
        yb.row(static_cast<Eigen::Index>(r - lo)) = onehot.row(order[r]);
      }
      Matrix pre = xb * c.w1_;
      pre.rowwise() += c.b1_;
      const Matrix hidden = pre.cwiseMax(0.0);
      Matrix proba = hidden * c.w2_;
      proba.rowwise() += c.b2_;
      softmax_rows(proba);
      const Matrix d_logits = (proba - yb) / static_cast<double>(m);
      const Matrix d_hidden = (d_logits * c.w2_.transpose()).cwiseProduct(
          pre.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; }));
      const Matrix gw1 = xb.transpose() * d_hidden;
      const RowVector gb1 = d_hidden.colwise().sum();
      const Matrix gw2 = hidden.transpose() * d_logits;
      const RowVector gb2 = d_logits.colwise().sum();
      const std::array<const double*, 4> grads{gw1.data(), gb1.data(), gw2.data(), gb2.data()};
      for (std::size_t i = 0; i < 4; ++i) std::copy(grads[i], grads[i] + sizes[i], grad.data() + offsets[i]);
      adam_step(flat, grad, adam, lr);
      unpack();
    }
  }
  c.iterations_ = kMlpEpochs;
  return c;
}

Matrix Classifier::predict_proba(const Matrix& x) const {
  if (x.cols() != w1_.rows()) throw DimensionMismatchError("classifier input width mismatch");
  Matrix z = x * w1_;
  z.rowwise() += b1_;
  if (kind_ == ClassifierKind::MLP) {
    Matrix hidden = z.cwiseMax(0.0);
    z = hidden * w2_;
    z.rowwise() += b2_;
  }
  softmax_rows(z);
  return z;
}

Labels Classifier::predict(const Matrix& x) const {
  const Matrix p = predict_proba(x);
  Labels out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index best = 0;
    p.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = classes_[static_cast<std::size_t>(best)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// SMOTE

RowVector smote_interpolate(const RowVector& x, const RowVector& neighbour, double lambda) {
  return x + lambda * (neighbour - x);
}

Matrix smote(const Matrix& minor_rows, std::size_t k, std::size_t n, Rng& rng, std::vector<SmoteDraw>* trace) {
  const auto rows = static_cast<std::size_t>(minor_rows.rows());
  if (rows < 2) throw DataError("SMOTE needs at least two minor rows");
  if (k < 1) throw ConfigError("SMOTE needs k >= 1");
  k = std::min(k, rows - 1);

  std::vector<std::vector<std::size_t>> neighbours(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t j = 0; j < rows; ++j)
      if (j != i)
        dist.emplace_back((minor_rows.row(static_cast<Eigen::Index>(i)) - minor_rows.row(static_cast<Eigen::Index>(j))).squaredNorm(), j);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t q = 0; q < k; ++q) neighbours[i].push_back(dist[q].second);
  }

  Matrix out(static_cast<Eigen::Index>(n), minor_rows.cols());
  for (std::size_t s = 0; s < n; ++s) {
    SmoteDraw draw;
    draw.base = rng.index(rows);
    draw.neighbour = neighbours[draw.base][rng.index(k)];
    draw.lambda = rng.uniform();
    out.row(static_cast<Eigen::Index>(s)) =
        smote_interpolate(minor_rows.row(static_cast<Eigen::Index>(draw.base)),
                          minor_rows.row(static_cast<Eigen::Index>(draw.neighbour)), draw.lambda);
    if (trace != nullptr) trace->push_back(draw);
  }
  return out;
}

Table smote_balance(const Table& table, const Encoder& encoder, std::size_t k, std::uint64_t seed) {
  const ClassPartition part = partition_classes(table, true);
  const Encoded enc = encode(encoder, table);
  std::vector<Row> extra;
  for (std::size_t c : part.minors) {
    const auto& idx = table.class_rows(c);
    Matrix minor(static_cast<Eigen::Index>(idx.size()), enc.features.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) minor.row(static_cast<Eigen::Index>(i)) = enc.features.row(static_cast<Eigen::Index>(idx[i]));
    Rng rng(seed, 4000 + c);
    const Matrix fake = smote(minor, k, part.max_count() - part.counts[c], rng);
    auto rows = decode(encoder, fake, table.class_labels()[c]);
    extra.insert(extra.end(), rows.begin(), rows.end());
  }
  return table.append(extra);
}

// ---------------------------------------------------------------------------
// Evaluation

void EvalConfig::validate() const {
  if (classifiers.empty()) throw ConfigError("eval needs at least one classifier");
  if (seeds.empty()) throw ConfigError("eval needs at least one seed");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("eval seeds must be distinct");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
}

json EvalConfig::to_json() const {
  json names = json::array();
  for (auto k : classifiers) names.push_back(to_string(k));
  return json{{"classifiers", names}, {"seeds", seeds}, {"test_fraction", test_fraction}};
}

EvalConfig EvalConfig::from_json(const json& j) {
  EvalConfig c;
  try {
    if (j.contains("classifiers")) {
      c.classifiers.clear();
      for (const auto& name : j.at("classifiers")) c.classifiers.push_back(classifier_from_string(name.get<std::string>()));
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    c.test_fraction = j.value("test_fraction", c.test_fraction);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("eval config: ") + e.what());
  }
  c.validate();
  return c;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.values = values;
  if (values.empty()) return out;
  out.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

json EvalSummary::to_json() const {
  json per = json::object();
  for (const auto& [name, ms] : per_classifier) per[name] = json{{"mean", ms.mean}, {"std", ms.std}, {"values", ms.values}};
  return json{{"per_classifier", per},
              {"overall", {{"mean", overall.mean}, {"std", overall.std}, {"values", overall.values}}},
              {"fits", fits}};
}

EvalSummary evaluate(const Table& train, const Table& test, const EvalConfig& cfg) {
  cfg.validate();
  if (!(train.schema() == test.schema())) throw DataError("train and test tables have different schemas");
  if (train.empty() || test.empty()) throw EmptyTableError("evaluation needs non-empty train and test tables");

  // Fit preprocessing on both tables so every test category is known.
  const Encoder encoder = fit_encoder(train.append(test.rows()));
  Matrix x_train = encode_rows(encoder, train.rows());
  const Matrix x_test = encode_rows(encoder, test.rows());
  const std::size_t label_col = train.schema().label_index();
  auto label_of = [&](const Row& row) { return std::get<std::string>(row[label_col]); };
  std::vector<std::string> names = encoder.class_labels();
  auto id_of = [&](const std::string& l) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), l) - names.begin());
  };

  // Canonical row order: sort by (label, features) so results ignore the input order.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Labels y_raw(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) y_raw[i] = id_of(label_of(train.rows()[i]));
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (y_raw[a] != y_raw[b]) return y_raw[a] < y_raw[b];
    for (Eigen::Index c = 0; c < x_train.cols(); ++c)
      if (x_train(a, c) != x_train(b, c)) return x_train(a, c) < x_train(b, c);
    return false;
  });
  Matrix x_sorted(x_train.rows(), x_train.cols());
  Labels y_train(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    x_sorted.row(static_cast<Eigen::Index>(i)) = x_train.row(static_cast<Eigen::Index>(order[i]));
    y_train[i] = y_raw[order[i]];
  }
  Labels y_test(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) y_test[i] = id_of(label_of(test.rows()[i]));

  EvalSummary summary;
  std::vector<double> all;
  for (auto kind : cfg.classifiers) {
    std::vector<double> scores;
    for (auto seed : cfg.seeds) {
      const Classifier clf = Classifier::train(kind, x_sorted, y_train, seed);
      scores.push_back(weighted_f1(y_test, clf.predict(x_test)));
      ++summary.fits;
    }
    all.insert(all.end(), scores.begin(), scores.end());
    summary.per_classifier[to_string(kind)] = mean_std(scores);
  }
  summary.overall = mean_std(all);
  return summary;
}

// ---------------------------------------------------------------------------
// Histograms

std::vector<HistogramBin> histogram(const Table& real, const std::string& column, std::size_t bins, const Table* other) {
  if (bins < 1) throw ConfigError("histogram needs at least one bin");
  const auto idx = real.schema().find(column);
  if (!idx) throw MissingColumnError(column);
  if (real.schema().columns()[*idx].kind != ColumnKind::Continuous)
    throw DataError("histogram column '" + column + "' is categorical");

  double lo = 0.0, hi = 1.0;
  if (!real.empty()) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& row : real.rows()) {
      lo = std::min(lo, std::get<double>(row[*idx]));
      hi = std::max(hi, std::get<double>(row[*idx]));
    }
    if (!(lo < hi)) hi = lo + kConstantColumnWidening;
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].low = lo + static_cast<double>(b) * width;
    out[b].high = b + 1 == bins ? hi : lo + static_cast<double>(b + 1) * width;
  }
  auto bin_of = [&](double v) {
    const double pos = std::floor((v - lo) / width);
    if (pos < 0) return std::size_t{0};
    return std::min(bins - 1, static_cast<std::size_t>(pos));
  };
  for (const auto& row : real.rows()) ++out[bin_of(std::get<double>(row[*idx]))].count_real;
  if (other != nullptr) {
    const auto oidx = other->schema().find(column);
    if (!oidx) throw MissingColumnError(column);
    for (const auto& row : other->rows()) ++out[bin_of(std::get<double>(row[*oidx]))].count_other;
  }
  return out;
}

void write_histogram_csv(const std::vector<HistogramBin>& bins, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "low,high,count_real,count_fake\n";
  for (const auto& b : bins)
    out << format_real(b.low) << ',' << format_real(b.high) << ',' << b.count_real << ',' << b.count_other << '\n';
}

}  // namespace sos
