#include "sos/pipeline.hpp"

#include <chrono>

#include "sos/error.hpp"
#include "sos/log.hpp"
#include "sos/parallel.hpp"

namespace sos {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Matrix select_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

const ClassNet& ModelSet::net(std::size_t class_id) const {
  if (class_id >= nets.size()) throw MissingArtifactError("no model for class id " + std::to_string(class_id));
  return nets[class_id];
}

std::string to_string(OversampleOption o) { return o == OversampleOption::Boundary ? "boundary" : "regular"; }

OversampleOption oversample_option_from_string(const std::string& s) {
  if (s == "boundary" || s == "option1") return OversampleOption::Boundary;
  if (s == "regular" || s == "option2") return OversampleOption::Regular;
  throw ConfigError("unknown oversampling option '" + s + "'");
}

TrainedModels train_models(const Table& table, const Encoder& encoder, NetSpec spec, const SdeConfig& sde,
                           const TrainConfig& cfg, std::size_t threads) {
  const auto start = std::chrono::steady_clock::now();
  sde.validate();
  spec.input_dim = encoder.dim();
  const Encoded enc = encode(encoder, table);
  const ClassPartition part = partition_classes(table);
  const std::size_t classes = table.class_labels().size();

  std::vector<TrainResult> results(classes);
  parallel_for(classes, threads, [&](std::size_t k) {
    TrainConfig class_cfg = cfg;
    class_cfg.seed = Rng(cfg.seed, 1000 + k).index(std::size_t{1} << 62);
    results[k] = train_class(select_rows(enc.features, table.class_rows(k)), spec, sde, class_cfg);
    log::info("trained class '" + table.class_labels()[k] + "'");
  });

  TrainedModels out{ModelSet{encoder, sde, {}, part.major, false}, {}, 0.0};
  for (std::size_t k = 0; k < classes; ++k) {
    out.models.nets.push_back(ClassNet{k, spec, std::move(results[k].params)});
    out.logs.push_back(std::move(results[k].log));
  }
  out.wall_seconds = seconds_since(start);
  return out;
}

FinetuneReport finetune_models(ModelSet& models, const Table& table, const FinetuneConfig& cfg,
                               std::size_t sampler_steps, std::size_t threads) {
  partition_classes(table, /*require_minor=*/true);
  if (models.nets.size() != table.class_labels().size())
    throw MissingArtifactError("model set does not cover every class of the table");
  const Encoded enc = encode(models.encoder, table);
  FinetuneReport report = finetune_all(models.nets, models.major, enc.features, models.sde, cfg, sampler_steps, threads);
  models.finetuned = true;
  return report;
}

Matrix initial_state(const SdeConfig& sde, const Matrix& features, const std::vector<std::size_t>& labels,
                     const OversampleJob& job, Rng& rng, std::vector<std::size_t>* seed_rows) {
  if (seed_rows != nullptr) seed_rows->clear();
  const auto n = static_cast<Eigen::Index>(job.count);
  if (job.option == OversampleOption::Regular) return sample_prior(sde, features.cols(), n, rng);

  std::vector<std::size_t> pool;
  for (std::size_t r = 0; r < labels.size(); ++r)
    if (labels[r] != job.target_class) pool.push_back(r);
  if (pool.empty()) throw DataError("boundary oversampling needs at least one non-target record");
  Matrix seeds(n, features.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t row = pool[rng.index(pool.size())];
    seeds.row(i) = features.row(static_cast<Eigen::Index>(row));
    if (seed_rows != nullptr) seed_rows->push_back(row);
  }
  return forward_perturb(sde, seeds, job.sampler.t_end, rng);
}

Matrix oversample_with(const SdeConfig& sde, const ScoreFn& score, const Matrix& features,
                       const std::vector<std::size_t>& labels, const OversampleJob& job, Rng& rng,
                       std::vector<std::size_t>* seed_rows) {
  if (static_cast<std::size_t>(features.rows()) != labels.size())
    throw DimensionMismatchError("one label per feature row required");
  if (job.count == 0) {
    if (seed_rows != nullptr) seed_rows->clear();
    return Matrix(0, features.cols());
  }
  Rng init_rng = rng.derive(1);
  Rng solve_rng = rng.derive(2);
  const Matrix x_T = initial_state(sde, features, labels, job, init_rng, seed_rows);
  const double start = job.option == OversampleOption::Boundary ? job.sampler.t_end : sde.t_max;
  return reverse_solve(sde, score, x_T, job.sampler, solve_rng, start).x;
}

Matrix oversample_class(const ModelSet& models, const Matrix& features, const std::vector<std::size_t>& labels,
                        const OversampleJob& job, Rng& rng) {
  const ClassNet& net = models.net(job.target_class);
  return oversample_with(models.sde, network_score(net.spec, net.params), features, labels, job, rng);
}

BalanceResult balance(const Table& table, const ModelSet& models, OversampleOption option,
                      const SamplerConfig& sampler, std::size_t threads) {
  const auto start = std::chrono::steady_clock::now();
  const ClassPartition part = partition_classes(table, /*require_minor=*/true);
  if (models.nets.size() != part.counts.size())
    throw MissingArtifactError("model set has " + std::to_string(models.nets.size()) + " classes, table has " +
                               std::to_string(part.counts.size()));
  const Encoded enc = encode(models.encoder, table);

  std::vector<Matrix> fakes(part.counts.size());
  parallel_for(part.minors.size(), threads, [&](std::size_t i) {
    const std::size_t k = part.minors[i];
    OversampleJob job{option, sampler, k, part.max_count() - part.counts[k]};
    Rng rng(sampler.seed, 2000 + k);
    fakes[k] = oversample_class(models, enc.features, enc.labels, job, rng);
  });

  BalanceResult out{table, std::vector<std::size_t>(part.counts.size(), 0), 0.0};
  std::vector<Row> extra;
  for (std::size_t k : part.minors) {
    auto rows = decode(models.encoder, fakes[k], table.class_labels()[k]);
    out.generated[k] = rows.size();
    extra.insert(extra.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  out.table = table.append(extra);
  out.wall_seconds = seconds_since(start);
  return out;
}

SynthResult synth_full(const Table& table, const Encoder& encoder, NetSpec spec, const SdeConfig& sde,
                       const TrainConfig& cfg, const SamplerConfig& sampler) {
  if (table.empty()) throw EmptyTableError("synth_full needs a non-empty table");
  spec.input_dim = encoder.dim();
  const Encoded enc = encode(encoder, table);

  auto start = std::chrono::steady_clock::now();
  TrainResult trained = train_class(enc.features, spec, sde, cfg);
  SynthResult out{table, std::move(trained.log), seconds_since(start), 0.0};

  start = std::chrono::steady_clock::now();
  Rng rng(sampler.seed, 3000);
  Rng solve_rng = rng.derive(2);
  const Matrix x_T = sample_prior(sde, enc.features.cols(), enc.features.rows(), rng);
  const Matrix fake = reverse_solve(sde, network_score(spec, trained.params), x_T, sampler, solve_rng).x;

  const std::size_t classes = table.class_labels().size();
  Matrix centroids = Matrix::Zero(static_cast<Eigen::Index>(classes), enc.features.cols());
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t r : table.class_rows(k)) centroids.row(k) += enc.features.row(static_cast<Eigen::Index>(r));
    centroids.row(k) /= static_cast<double>(table.class_rows(k).size());
  }
  std::vector<Row> rows;
  rows.reserve(static_cast<std::size_t>(fake.rows()));
  for (Eigen::Index i = 0; i < fake.rows(); ++i) {
    Eigen::Index best = 0;
    (centroids.rowwise() - fake.row(i)).rowwise().squaredNorm().minCoeff(&best);
    auto decoded = decode(encoder, fake.row(i), table.class_labels()[static_cast<std::size_t>(best)]);
    rows.push_back(std::move(decoded.front()));
  }
  out.table = Table(table.schema(), std::move(rows));
  out.generate_seconds = seconds_since(start);
  return out;
}

}  // namespace sos
