#pragma once

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "sos/types.hpp"

namespace sos {

enum class LayerType { Squash, Concat, Concatsquash };
enum class Activation { ReLU, LeakyReLU, SoftPlus };

std::string to_string(LayerType t);
std::string to_string(Activation a);
LayerType layer_type_from_string(const std::string& s);
Activation activation_from_string(const std::string& s);

inline constexpr double kLeakySlope = 0.2;

/// Time-conditioned score network S(x_t, t):
///   h_0 = x_t
///   h_i = act(H_i(h_{i-1}, t) ++ h_{i-1})
///   S   = FC(h_N)
/// where H_i is one of
///   Squash:       FC_i(h) * sigmoid(FC^t_i(t))
///   Concat:       FC_i(t ++ h)
///   Concatsquash: FC_i(h) * sigmoid(FC^gate_i(t) + FC^bias_i(t))
/// Because of the skip concatenation, width(h_i) = hidden_dims[i] + width(h_{i-1}).
struct NetSpec {
  LayerType layer_type = LayerType::Concat;
  std::vector<std::size_t> hidden_dims{64, 64};
  Activation activation = Activation::LeakyReLU;
  std::size_t input_dim = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static NetSpec from_json(const nlohmann::json& j);
  bool operator==(const NetSpec&) const = default;
};

/// Offsets into the flat parameter array. Weight matrices are row-major
/// [out x in]. Unused time-branch offsets are kAbsent.
struct LayerOffsets {
  static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
  std::size_t in_width = 0;   // width of h_{i-1}
  std::size_t out_width = 0;  // hidden_dims[i]
  std::size_t weight = kAbsent;
  std::size_t bias = kAbsent;
  std::size_t time_weight = kAbsent;  // Squash: FC^t, Concatsquash: FC^gate
  std::size_t time_bias = kAbsent;
  std::size_t time2_weight = kAbsent;  // Concatsquash: FC^bias
  std::size_t time2_bias = kAbsent;
};

struct ParamLayout {
  std::vector<LayerOffsets> hidden;
  LayerOffsets output;  // final FC, in_width = width(h_N)
  std::size_t size = 0;
};

ParamLayout param_layout(const NetSpec& spec);
/// Human-readable description of the layout, stored in model files.
nlohmann::json describe_layout(const NetSpec& spec);

/// Glorot-uniform weights, zero biases. Deterministic in `seed`.
Params init_params(const NetSpec& spec, std::uint64_t seed);

/// Intermediate values kept for backpropagation.
struct ForwardCache {
  struct Layer {
    Matrix input;   // h_{i-1}
    Matrix linear;  // FC_i output before gating (Squash/Concatsquash)
    Matrix gate;    // sigmoid(...) (Squash/Concatsquash)
    Matrix pre;     // H_i ++ h_{i-1}, before the activation
  };
  std::vector<Layer> layers;
  Matrix last_hidden;
  Vector times;
};

/// Batched forward: one row of `x` per record, one entry of `t` per row.
Matrix forward(const NetSpec& spec, const Params& params, const Matrix& x, const Vector& t,
               ForwardCache* cache = nullptr);
/// Same time for every row.
Matrix forward(const NetSpec& spec, const Params& params, const Matrix& x, double t);
Vector forward(const NetSpec& spec, const Params& params, const Vector& x, double t);

/// Gradient of sum_ij d_out(i,j) * S(x, t)(i,j) with respect to the parameters.
std::vector<double> backward(const NetSpec& spec, const Params& params, const ForwardCache& cache,
                             const Matrix& d_out);

}  // namespace sos
