#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "peacelens/nn/network_spec.hpp"

namespace peacelens::nn {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
/// One example per row.
template <typename Scalar>
using Batch = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Where one layer's parameters live inside the flat parameter vector.
/// Kernels are column-major (fan_in x fan_out); for Conv1D the fan_in axis
/// enumerates (tap, input channel) with the channel varying fastest.
struct ParamSlot {
  bool present = false;
  Eigen::Index kernel_offset = 0;
  Eigen::Index kernel_rows = 0;
  Eigen::Index kernel_cols = 0;
  Eigen::Index bias_offset = 0;
  Eigen::Index bias_size = 0;

  friend bool operator==(const ParamSlot&, const ParamSlot&) = default;
};

/// Parameter layout derived from the NetworkSpec alone.
inline std::vector<ParamSlot> param_layout(const NetworkSpec& spec,
                                           Eigen::Index* total = nullptr) {
  const auto shapes = infer_shapes(spec);
  std::vector<ParamSlot> slots(spec.layers.size());
  Eigen::Index offset = 0;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    ParamSlot& s = slots[i];
    if (l.kind == LayerKind::Conv1D) {
      s.kernel_rows = static_cast<Eigen::Index>(l.kernel_size) * shapes[i].channels;
      s.kernel_cols = l.filters;
    } else if (l.kind == LayerKind::Dense) {
      s.kernel_rows = shapes[i].size();
      s.kernel_cols = l.units;
    } else {
      continue;
    }
    s.present = true;
    s.kernel_offset = offset;
    offset += s.kernel_rows * s.kernel_cols;
    s.bias_offset = offset;
    s.bias_size = s.kernel_cols;
    offset += s.bias_size;
  }
  if (total) *total = offset;
  return slots;
}

/// Trainable parameters of a network, stored contiguously. Gradients use the
/// same type.
template <typename Scalar>
class ModelWeights {
 public:
  using KernelMap = Eigen::Map<Matrix<Scalar>>;
  using ConstKernelMap = Eigen::Map<const Matrix<Scalar>>;
  using BiasMap = Eigen::Map<Vector<Scalar>>;
  using ConstBiasMap = Eigen::Map<const Vector<Scalar>>;

  ModelWeights() = default;
  explicit ModelWeights(const NetworkSpec& spec) {
    Eigen::Index total = 0;
    slots_ = param_layout(spec, &total);
    params_ = Vector<Scalar>::Zero(total);
  }

  const std::vector<ParamSlot>& layout() const { return slots_; }
  std::size_t layer_count() const { return slots_.size(); }
  bool has_params(std::size_t layer) const { return slots_.at(layer).present; }
  Eigen::Index size() const { return params_.size(); }

  Vector<Scalar>& flat() { return params_; }
  const Vector<Scalar>& flat() const { return params_; }

  KernelMap kernel(std::size_t layer) {
    const ParamSlot& s = slot(layer);
    return KernelMap(params_.data() + s.kernel_offset, s.kernel_rows, s.kernel_cols);
  }
  ConstKernelMap kernel(std::size_t layer) const {
    const ParamSlot& s = slot(layer);
    return ConstKernelMap(params_.data() + s.kernel_offset, s.kernel_rows,
                          s.kernel_cols);
  }
  BiasMap bias(std::size_t layer) {
    const ParamSlot& s = slot(layer);
    return BiasMap(params_.data() + s.bias_offset, s.bias_size);
  }
  ConstBiasMap bias(std::size_t layer) const {
    const ParamSlot& s = slot(layer);
    return ConstBiasMap(params_.data() + s.bias_offset, s.bias_size);
  }

  bool matches(const NetworkSpec& spec) const {
    Eigen::Index total = 0;
    auto expected = param_layout(spec, &total);
    return expected == slots_ && total == params_.size();
  }

  bool all_finite() const { return params_.allFinite(); }

  template <typename Other>
  ModelWeights<Other> cast() const {
    ModelWeights<Other> out;
    out.assign(slots_, params_.template cast<Other>());
    return out;
  }

  void assign(std::vector<ParamSlot> slots, Vector<Scalar> params) {
    slots_ = std::move(slots);
    params_ = std::move(params);
  }

 private:
  const ParamSlot& slot(std::size_t layer) const {
    const ParamSlot& s = slots_.at(layer);
    if (!s.present) throw ShapeMismatch("layer has no parameters");
    return s;
  }

  std::vector<ParamSlot> slots_;
  Vector<Scalar> params_;
};

/// Glorot-uniform kernels (Keras fan convention: conv fans scale with the
/// kernel width), zero biases.
template <typename Scalar, typename Rng>
ModelWeights<Scalar> glorot_init(const NetworkSpec& spec, Rng& rng) {
  ModelWeights<Scalar> w(spec);
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!w.has_params(i)) continue;
    const LayerSpec& l = spec.layers[i];
    auto k = w.kernel(i);
    double fan_in = static_cast<double>(k.rows());
    double fan_out = static_cast<double>(k.cols());
    if (l.kind == LayerKind::Conv1D) fan_out *= l.kernel_size;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < k.size(); ++j)
      k.data()[j] = static_cast<Scalar>(dist(rng));
  }
  return w;
}

}  // namespace peacelens::nn
