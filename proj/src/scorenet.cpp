#include "sos/scorenet.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <random>

#include "sos/error.hpp"

namespace sos {

using nlohmann::json;

std::string to_string(LayerType t) {
  switch (t) {
    case LayerType::Squash:
      return "squash";
    case LayerType::Concat:
      return "concat";
    case LayerType::Concatsquash:
      return "concatsquash";
  }
  return "?";
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU:
      return "relu";
    case Activation::LeakyReLU:
      return "leaky_relu";
    case Activation::SoftPlus:
      return "softplus";
  }
  return "?";
}

LayerType layer_type_from_string(const std::string& s) {
  if (s == "squash") return LayerType::Squash;
  if (s == "concat") return LayerType::Concat;
  if (s == "concatsquash") return LayerType::Concatsquash;
  throw ConfigError("unknown layer type '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "leaky_relu" || s == "leakyrelu") return Activation::LeakyReLU;
  if (s == "softplus") return Activation::SoftPlus;
  throw ConfigError("unknown activation '" + s + "'");
}

void NetSpec::validate() const {
  if (input_dim < 1) throw ConfigError("net input_dim must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("net needs at least one hidden layer");
  for (auto d : hidden_dims)
    if (d < 1) throw ConfigError("hidden dims must be >= 1");
}

json NetSpec::to_json() const {
  return json{{"layer_type", to_string(layer_type)},
              {"hidden_dims", hidden_dims},
              {"activation", to_string(activation)},
              {"input_dim", input_dim}};
}

NetSpec NetSpec::from_json(const json& j) {
  NetSpec s;
  try {
    if (j.contains("layer_type")) s.layer_type = layer_type_from_string(j.at("layer_type").get<std::string>());
    if (j.contains("hidden_dims")) s.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
    if (j.contains("activation")) s.activation = activation_from_string(j.at("activation").get<std::string>());
    s.input_dim = j.value("input_dim", std::size_t{1});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("net spec: ") + e.what());
  }
  s.validate();
  return s;
}

ParamLayout param_layout(const NetSpec& spec) {
  spec.validate();
  ParamLayout layout;
  std::size_t cursor = 0;
  auto take = [&](std::size_t n) {
    const std::size_t at = cursor;
    cursor += n;
    return at;
  };
  std::size_t width = spec.input_dim;
  for (std::size_t out : spec.hidden_dims) {
    LayerOffsets l;
    l.in_width = width;
    l.out_width = out;
    const std::size_t fan_in = spec.layer_type == LayerType::Concat ? width + 1 : width;
    l.weight = take(out * fan_in);
    l.bias = take(out);
    if (spec.layer_type != LayerType::Concat) {
      l.time_weight = take(out);
      l.time_bias = take(out);
    }
    if (spec.layer_type == LayerType::Concatsquash) {
      l.time2_weight = take(out);
      l.time2_bias = take(out);
    }
    layout.hidden.push_back(l);
    width += out;
  }
  layout.output.in_width = width;
  layout.output.out_width = spec.input_dim;
  layout.output.weight = take(spec.input_dim * width);
  layout.output.bias = take(spec.input_dim);
  layout.size = cursor;
  return layout;
}

json describe_layout(const NetSpec& spec) {
  const ParamLayout layout = param_layout(spec);
  json layers = json::array();
  auto entry = [](const char* name, std::size_t offset, std::size_t rows, std::size_t cols) {
    return json{{"name", name}, {"offset", offset}, {"shape", {rows, cols}}};
  };
  for (const auto& l : layout.hidden) {
    json items = json::array();
    const std::size_t fan_in = spec.layer_type == LayerType::Concat ? l.in_width + 1 : l.in_width;
    items.push_back(entry("fc.weight", l.weight, l.out_width, fan_in));
    items.push_back(entry("fc.bias", l.bias, l.out_width, 1));
    if (l.time_weight != LayerOffsets::kAbsent) {
      const bool squash = spec.layer_type == LayerType::Squash;
      items.push_back(entry(squash ? "fc_t.weight" : "fc_gate.weight", l.time_weight, l.out_width, 1));
      items.push_back(entry(squash ? "fc_t.bias" : "fc_gate.bias", l.time_bias, l.out_width, 1));
    }
    if (l.time2_weight != LayerOffsets::kAbsent) {
      items.push_back(entry("fc_bias.weight", l.time2_weight, l.out_width, 1));
      items.push_back(entry("fc_bias.bias", l.time2_bias, l.out_width, 1));
    }
    layers.push_back(items);
  }
  json out = json::array();
  out.push_back(entry("fc.weight", layout.output.weight, layout.output.out_width, layout.output.in_width));
  out.push_back(entry("fc.bias", layout.output.bias, layout.output.out_width, 1));
  return json{{"hidden", layers}, {"output", out}, {"size", layout.size}};
}

Params init_params(const NetSpec& spec, std::uint64_t seed) {
  const ParamLayout layout = param_layout(spec);
  Params p(layout.size, 0.0);
  std::mt19937_64 engine(seed);
  auto glorot = [&](std::size_t offset, std::size_t fan_out, std::size_t fan_in) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (std::size_t k = 0; k < fan_out * fan_in; ++k) p[offset + k] = u(engine);
  };
  for (const auto& l : layout.hidden) {
    const std::size_t fan_in = spec.layer_type == LayerType::Concat ? l.in_width + 1 : l.in_width;
    glorot(l.weight, l.out_width, fan_in);
    if (l.time_weight != LayerOffsets::kAbsent) glorot(l.time_weight, l.out_width, 1);
    if (l.time2_weight != LayerOffsets::kAbsent) glorot(l.time2_weight, l.out_width, 1);
  }
  glorot(layout.output.weight, layout.output.out_width, layout.output.in_width);
  return p;
}

namespace {

using RowMap = Eigen::Map<const Matrix>;
using VecMap = Eigen::Map<const Eigen::VectorXd>;
using MutRowMap = Eigen::Map<Matrix>;
using MutVecMap = Eigen::Map<Eigen::VectorXd>;

RowMap weights(const Params& p, std::size_t offset, std::size_t rows, std::size_t cols) {
  return RowMap(p.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

VecMap vec(const Params& p, std::size_t offset, std::size_t n) {
  return VecMap(p.data() + offset, static_cast<Eigen::Index>(n));
}

Matrix sigmoid(const Matrix& z) {
  return z.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

Matrix activate(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::ReLU:
      return z.cwiseMax(0.0);
    case Activation::LeakyReLU:
      return z.unaryExpr([](double v) { return v > 0 ? v : kLeakySlope * v; });
    case Activation::SoftPlus:
      return z.unaryExpr([](double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); });
  }
  return z;
}

Matrix activation_grad(Activation a, const Matrix& z) {
  switch (a) {
    case Activation::ReLU:
      return z.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    case Activation::LeakyReLU:
      return z.unaryExpr([](double v) { return v > 0 ? 1.0 : kLeakySlope; });
    case Activation::SoftPlus:
      return sigmoid(z);
  }
  return z;
}

// Time-branch pre-activation for a gated layer: [B x out].
Matrix gate_logits(const NetSpec& spec, const Params& p, const LayerOffsets& l, const Vector& t) {
  const auto out = static_cast<Eigen::Index>(l.out_width);
  RowVector w = vec(p, l.time_weight, l.out_width).transpose();
  RowVector b = vec(p, l.time_bias, l.out_width).transpose();
  if (spec.layer_type == LayerType::Concatsquash) {
    w += vec(p, l.time2_weight, l.out_width).transpose();
    b += vec(p, l.time2_bias, l.out_width).transpose();
  }
  Matrix z(t.size(), out);
  z.noalias() = t * w;
  z.rowwise() += b;
  return z;
}

}  // namespace

Matrix forward(const NetSpec& spec, const Params& params, const Matrix& x, const Vector& t, ForwardCache* cache) {
  const ParamLayout layout = param_layout(spec);
  if (params.size() != layout.size)
    throw DimensionMismatchError("params length " + std::to_string(params.size()) + " != " +
                                 std::to_string(layout.size));
  if (static_cast<std::size_t>(x.cols()) != spec.input_dim)
    throw DimensionMismatchError("input width " + std::to_string(x.cols()) + " != input_dim " +
                                 std::to_string(spec.input_dim));
  if (t.size() != x.rows()) throw DimensionMismatchError("one time per row required");

  const Eigen::Index batch = x.rows();
  if (cache != nullptr) {
    cache->layers.clear();
    cache->times = t;
  }
  Matrix h = x;
  for (const auto& l : layout.hidden) {
    const auto out = static_cast<Eigen::Index>(l.out_width);
    const auto in = static_cast<Eigen::Index>(l.in_width);
    Matrix pre(batch, out + in);
    ForwardCache::Layer record;
    if (spec.layer_type == LayerType::Concat) {
      const auto w = weights(params, l.weight, l.out_width, l.in_width + 1);
      Matrix lin = t * w.col(0).transpose();
      lin.noalias() += h * w.rightCols(in).transpose();
      lin.rowwise() += vec(params, l.bias, l.out_width).transpose();
      pre.leftCols(out) = lin;
    } else {
      const auto w = weights(params, l.weight, l.out_width, l.in_width);
      Matrix lin = h * w.transpose();
      lin.rowwise() += vec(params, l.bias, l.out_width).transpose();
      Matrix gate = sigmoid(gate_logits(spec, params, l, t));
      pre.leftCols(out) = lin.cwiseProduct(gate);
      if (cache != nullptr) {
        record.linear = std::move(lin);
        record.gate = std::move(gate);
      }
    }
    pre.rightCols(in) = h;
    Matrix next = activate(spec.activation, pre);
    if (cache != nullptr) {
      record.input = std::move(h);
      record.pre = std::move(pre);
      cache->layers.push_back(std::move(record));
    }
    h = std::move(next);
  }
  const auto& o = layout.output;
  Matrix y = h * weights(params, o.weight, o.out_width, o.in_width).transpose();
  y.rowwise() += vec(params, o.bias, o.out_width).transpose();
  if (cache != nullptr) cache->last_hidden = std::move(h);
  return y;
}

Matrix forward(const NetSpec& spec, const Params& params, const Matrix& x, double t) {
  return forward(spec, params, x, Vector::Constant(x.rows(), t));
}

Vector forward(const NetSpec& spec, const Params& params, const Vector& x, double t) {
  Matrix row = x.transpose();
  return forward(spec, params, row, Vector::Constant(1, t)).row(0).transpose();
}

std::vector<double> backward(const NetSpec& spec, const Params& params, const ForwardCache& cache,
                             const Matrix& d_out) {
  const ParamLayout layout = param_layout(spec);
  if (params.size() != layout.size || cache.layers.size() != layout.hidden.size())
    throw DimensionMismatchError("cache does not match the network");
  std::vector<double> grad(layout.size, 0.0);
  auto gmat = [&](std::size_t offset, std::size_t rows, std::size_t cols) {
    return MutRowMap(grad.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  };
  auto gvec = [&](std::size_t offset, std::size_t n) {
    return MutVecMap(grad.data() + offset, static_cast<Eigen::Index>(n));
  };
  const Vector& t = cache.times;

  const auto& o = layout.output;
  gmat(o.weight, o.out_width, o.in_width).noalias() = d_out.transpose() * cache.last_hidden;
  gvec(o.bias, o.out_width) = d_out.colwise().sum().transpose();
  Matrix dh = d_out * weights(params, o.weight, o.out_width, o.in_width);

  for (std::size_t i = layout.hidden.size(); i-- > 0;) {
    const auto& l = layout.hidden[i];
    const auto& rec = cache.layers[i];
    const auto out = static_cast<Eigen::Index>(l.out_width);
    const auto in = static_cast<Eigen::Index>(l.in_width);
    const Matrix d_pre = dh.cwiseProduct(activation_grad(spec.activation, rec.pre));
    const auto d_h_branch = d_pre.leftCols(out);
    Matrix d_in = d_pre.rightCols(in);

    if (spec.layer_type == LayerType::Concat) {
      const auto w = weights(params, l.weight, l.out_width, l.in_width + 1);
      auto gw = gmat(l.weight, l.out_width, l.in_width + 1);
      gw.col(0) = d_h_branch.transpose() * t;
      gw.rightCols(in).noalias() = d_h_branch.transpose() * rec.input;
      gvec(l.bias, l.out_width) = d_h_branch.colwise().sum().transpose();
      d_in.noalias() += d_h_branch * w.rightCols(in);
    } else {
      const auto w = weights(params, l.weight, l.out_width, l.in_width);
      const Matrix d_lin = d_h_branch.cwiseProduct(rec.gate);
      const Matrix d_logit =
          d_h_branch.cwiseProduct(rec.linear).cwiseProduct(rec.gate.cwiseProduct((1.0 - rec.gate.array()).matrix()));
      gmat(l.weight, l.out_width, l.in_width).noalias() = d_lin.transpose() * rec.input;
      gvec(l.bias, l.out_width) = d_lin.colwise().sum().transpose();
      const Vector d_tw = d_logit.transpose() * t;
      const Vector d_tb = d_logit.colwise().sum().transpose();
      gvec(l.time_weight, l.out_width) = d_tw;
      gvec(l.time_bias, l.out_width) = d_tb;
      if (spec.layer_type == LayerType::Concatsquash) {
        gvec(l.time2_weight, l.out_width) = d_tw;
        gvec(l.time2_bias, l.out_width) = d_tb;
      }
      d_in.noalias() += d_lin * w;
    }
    dh = std::move(d_in);
  }
  return grad;
}

}  // namespace sos
