#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "peacelens/nn/network_spec.hpp"
#include "peacelens/nn/weights.hpp"

namespace peacelens::nn {

/// Probability clamp applied before the logarithm in the loss.
inline constexpr double kLossEpsilon = 1e-7;

/// Labels at or above this probability are high-peace (1).
inline constexpr double kDecisionThreshold = 0.5;

class StaleCache : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline double bce_loss(double prediction, int label) {
  const double p = std::clamp(prediction, kLossEpsilon, 1.0 - kLossEpsilon);
  return label == 1 ? -std::log(p) : -std::log1p(-p);
}

inline int decide(double probability) {
  return probability >= kDecisionThreshold ? 1 : 0;
}

/// Activations recorded by a forward pass, consumed by backward().
template <typename Scalar>
struct ForwardCache {
  /// activations[0] is the input; activations[i + 1] is layer i's output.
  std::vector<Batch<Scalar>> activations;
  /// Inverted-dropout multipliers, populated for Dropout layers in training.
  std::vector<Batch<Scalar>> dropout_masks;
  /// For MaxPool1D layers: per example, the input index chosen for each output.
  std::vector<Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      pool_argmax;
  bool training = false;

  Eigen::Index batch_size() const {
    return activations.empty() ? 0 : activations.front().rows();
  }
  Vector<Scalar> probabilities() const { return activations.back().col(0); }
};

namespace detail {

template <typename Scalar>
using PatchMap = Eigen::Map<const Batch<Scalar>, Eigen::Unaligned, Eigen::OuterStride<>>;

template <typename Derived>
void activate(Eigen::MatrixBase<Derived>& x, Activation a) {
  using Scalar = typename Derived::Scalar;
  switch (a) {
    case Activation::None:
      break;
    case Activation::ReLU:
      x = x.cwiseMax(Scalar(0));
      break;
    case Activation::Sigmoid: {
      // Keep the output strictly inside (0, 1) even when exp saturates.
      const Scalar lo = std::numeric_limits<Scalar>::min();
      const Scalar hi = Scalar(1) - std::numeric_limits<Scalar>::epsilon() / 2;
      x = x.unaryExpr([lo, hi](Scalar z) {
        return std::clamp(Scalar(1) / (Scalar(1) + std::exp(-z)), lo, hi);
      });
      break;
    }
  }
}

/// grad <- grad * activation'(output), with the derivative written in terms
/// of the activation's output.
template <typename Scalar>
void activation_backward(Batch<Scalar>& grad, const Batch<Scalar>& output,
                         Activation a) {
  switch (a) {
    case Activation::None:
      break;
    case Activation::ReLU:
      grad = (output.array() > Scalar(0)).select(grad, Scalar(0));
      break;
    case Activation::Sigmoid:
      grad.array() *= output.array() * (Scalar(1) - output.array());
      break;
  }
}

template <typename Scalar, typename Rng>
void apply_layer(const LayerSpec& l, const Shape& in_shape, const Shape& out_shape,
                 const ModelWeights<Scalar>& w, std::size_t index,
                 ForwardCache<Scalar>& cache, Rng* rng) {
  const Batch<Scalar>& in = cache.activations[index];
  Batch<Scalar>& out = cache.activations[index + 1];
  const Eigen::Index batch = in.rows();

  switch (l.kind) {
    case LayerKind::Conv1D: {
      const auto kernel = w.kernel(index);
      const auto bias = w.bias(index);
      const Eigen::Index channels = in_shape.channels;
      const Eigen::Index out_len = out_shape.length;
      out.resize(batch, out_shape.size());
      for (Eigen::Index b = 0; b < batch; ++b) {
        PatchMap<Scalar> patches(in.row(b).data(), out_len, kernel.rows(),
                                 Eigen::OuterStride<>(channels));
        Eigen::Map<Batch<Scalar>> o(out.row(b).data(), out_len, kernel.cols());
        o.noalias() = patches * kernel;
        o.rowwise() += bias.transpose();
      }
      activate(out, l.activation);
      break;
    }
    case LayerKind::MaxPool1D: {
      const Eigen::Index channels = in_shape.channels;
      const Eigen::Index out_len = out_shape.length;
      const Eigen::Index pool = l.pool_size;
      out.resize(batch, out_shape.size());
      auto& arg = cache.pool_argmax[index];
      arg.resize(batch, out_shape.size());
      for (Eigen::Index b = 0; b < batch; ++b) {
        const Scalar* src = in.row(b).data();
        for (Eigen::Index j = 0; j < out_len; ++j) {
          for (Eigen::Index c = 0; c < channels; ++c) {
            Eigen::Index best = j * pool * channels + c;
            for (Eigen::Index t = 1; t < pool; ++t) {
              const Eigen::Index k = (j * pool + t) * channels + c;
              if (src[k] > src[best]) best = k;
            }
            out(b, j * channels + c) = src[best];
            arg(b, j * channels + c) = best;
          }
        }
      }
      break;
    }
    case LayerKind::Flatten:
      out = in;
      break;
    case LayerKind::Dense: {
      out.noalias() = in * w.kernel(index);
      out.rowwise() += w.bias(index).transpose();
      activate(out, l.activation);
      break;
    }
    case LayerKind::Dropout: {
      if (!cache.training || l.rate == 0.0) {
        out = in;
        break;
      }
      // A mask already present in the cache is replayed rather than redrawn.
      auto& mask = cache.dropout_masks[index];
      if (mask.rows() != batch || mask.cols() != in.cols()) {
        mask.resize(batch, in.cols());
        const Scalar keep_scale = Scalar(1.0 / (1.0 - l.rate));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Eigen::Index j = 0; j < mask.size(); ++j)
          mask.data()[j] = u(*rng) < l.rate ? Scalar(0) : keep_scale;
      }
      out = in.cwiseProduct(mask);
      break;
    }
    case LayerKind::Activation:
      out = in;
      activate(out, l.activation);
      break;
  }
}

}  // namespace detail

/// Recomputes activations from layer `first` onward, reusing
/// cache.activations[first] as that layer's input. In training mode, dropout
/// masks already in the cache are reused; missing ones are drawn from `rng`.
template <typename Scalar, typename Rng>
void forward_from(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                  ForwardCache<Scalar>& cache, std::size_t first, Rng& rng) {
  const auto shapes = infer_shapes(spec);
  if (!weights.matches(spec))
    throw ShapeMismatch("weights do not match the network spec");
  if (cache.activations.size() != spec.layers.size() + 1)
    throw StaleCache("activation cache does not match the network depth");
  for (std::size_t i = first; i < spec.layers.size(); ++i)
    detail::apply_layer(spec.layers[i], shapes[i], shapes[i + 1], weights, i, cache,
                        &rng);
}

template <typename Scalar, typename Rng>
ForwardCache<Scalar> forward(const NetworkSpec& spec,
                             const ModelWeights<Scalar>& weights,
                             const Batch<Scalar>& input, bool training, Rng& rng) {
  if (input.cols() != spec.input_length)
    throw ShapeMismatch("input has " + std::to_string(input.cols()) +
                        " features, network expects " +
                        std::to_string(spec.input_length));
  if (!input.allFinite()) throw std::invalid_argument("input contains non-finite values");
  ForwardCache<Scalar> cache;
  cache.training = training;
  cache.activations.resize(spec.layers.size() + 1);
  cache.dropout_masks.resize(spec.layers.size());
  cache.pool_argmax.resize(spec.layers.size());
  cache.activations[0] = input;
  forward_from(spec, weights, cache, 0, rng);
  return cache;
}

/// Inference: dropout is the identity and no randomness is consumed.
template <typename Scalar>
Vector<Scalar> predict_batch(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                             const Batch<Scalar>& input) {
  std::mt19937_64 unused(0);
  return forward(spec, weights, input, false, unused).probabilities();
}

template <typename Scalar, typename Derived>
double predict(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
               const Eigen::MatrixBase<Derived>& embedding) {
  Batch<Scalar> row = embedding.transpose().template cast<Scalar>();
  return static_cast<double>(predict_batch(spec, weights, row)(0));
}

/// Mean binary cross-entropy over a batch.
template <typename Scalar>
double batch_loss(const Vector<Scalar>& probabilities, const Eigen::VectorXi& labels) {
  if (probabilities.size() != labels.size() || labels.size() == 0)
    throw std::invalid_argument("probabilities and labels must be equal, non-empty");
  double total = 0.0;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    total += bce_loss(static_cast<double>(probabilities(i)), labels(i));
  return total / static_cast<double>(labels.size());
}

/// Gradients of batch_loss() with respect to every parameter, given the cache
/// of the forward pass that produced the probabilities.
template <typename Scalar>
ModelWeights<Scalar> backward(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                              const ForwardCache<Scalar>& cache,
                              const Eigen::VectorXi& labels) {
  const auto shapes = infer_shapes(spec);
  if (!weights.matches(spec))
    throw ShapeMismatch("weights do not match the network spec");
  const std::size_t depth = spec.layers.size();
  if (cache.activations.size() != depth + 1 || cache.dropout_masks.size() != depth ||
      cache.pool_argmax.size() != depth)
    throw StaleCache("activation cache missing or from a different network");
  const Eigen::Index batch = cache.batch_size();
  for (std::size_t i = 0; i <= depth; ++i)
    if (cache.activations[i].rows() != batch ||
        cache.activations[i].cols() != shapes[i].size())
      throw StaleCache("activation cache shape does not match the network spec");
  if (labels.size() != batch) throw std::invalid_argument("label count != batch size");
  for (std::size_t i = 0; i < depth; ++i) {
    const LayerSpec& l = spec.layers[i];
    if (l.kind == LayerKind::Dropout && cache.training && l.rate > 0.0 &&
        cache.dropout_masks[i].size() != cache.activations[i].size())
      throw StaleCache("dropout mask missing for a training-mode cache");
    if (l.kind == LayerKind::MaxPool1D &&
        cache.pool_argmax[i].size() != cache.activations[i + 1].size())
      throw StaleCache("pooling indices missing from the cache");
  }

  ModelWeights<Scalar> grads(spec);

  // dLoss/dp of the clamped loss, averaged over the batch.
  Batch<Scalar> d(batch, 1);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const double p = static_cast<double>(cache.activations[depth](b, 0));
    double g = 0.0;
    if (p > kLossEpsilon && p < 1.0 - kLossEpsilon)
      g = labels(b) == 1 ? -1.0 / p : 1.0 / (1.0 - p);
    d(b, 0) = static_cast<Scalar>(g / static_cast<double>(batch));
  }

  for (std::size_t ii = depth; ii-- > 0;) {
    const LayerSpec& l = spec.layers[ii];
    const Batch<Scalar>& in = cache.activations[ii];
    const Batch<Scalar>& out = cache.activations[ii + 1];
    const bool need_input_grad = ii > 0;

    switch (l.kind) {
      case LayerKind::Dense: {
        detail::activation_backward(d, out, l.activation);
        grads.kernel(ii).noalias() = in.transpose() * d;
        grads.bias(ii) = d.colwise().sum().transpose();
        if (need_input_grad) {
          Batch<Scalar> next = d * weights.kernel(ii).transpose();
          d.swap(next);
        }
        break;
      }
      case LayerKind::Conv1D: {
        detail::activation_backward(d, out, l.activation);
        const auto kernel = weights.kernel(ii);
        auto gk = grads.kernel(ii);
        auto gb = grads.bias(ii);
        const Eigen::Index channels = shapes[ii].channels;
        const Eigen::Index out_len = shapes[ii + 1].length;
        const Eigen::Index span = kernel.rows();
        Batch<Scalar> din;
        if (need_input_grad) din = Batch<Scalar>::Zero(batch, in.cols());
        Batch<Scalar> dpatch;
        for (Eigen::Index b = 0; b < batch; ++b) {
          detail::PatchMap<Scalar> patches(in.row(b).data(), out_len, span,
                                           Eigen::OuterStride<>(channels));
          Eigen::Map<const Batch<Scalar>> dout(d.row(b).data(), out_len, kernel.cols());
          gk.noalias() += patches.transpose() * dout;
          gb += dout.colwise().sum().transpose();
          if (need_input_grad) {
            dpatch.noalias() = dout * kernel.transpose();
            Scalar* dst = din.row(b).data();
            for (Eigen::Index t = 0; t < out_len; ++t)
              Eigen::Map<Vector<Scalar>>(dst + t * channels, span) +=
                  dpatch.row(t).transpose();
          }
        }
        if (need_input_grad) d.swap(din);
        break;
      }
      case LayerKind::MaxPool1D: {
        Batch<Scalar> din = Batch<Scalar>::Zero(batch, in.cols());
        const auto& arg = cache.pool_argmax[ii];
        for (Eigen::Index b = 0; b < batch; ++b)
          for (Eigen::Index j = 0; j < arg.cols(); ++j) din(b, arg(b, j)) += d(b, j);
        d.swap(din);
        break;
      }
      case LayerKind::Flatten:
        break;
      case LayerKind::Dropout:
        if (cache.training && l.rate > 0.0) d = d.cwiseProduct(cache.dropout_masks[ii]);
        break;
      case LayerKind::Activation:
        detail::activation_backward(d, out, l.activation);
        break;
    }
  }
  return grads;
}

}  // namespace peacelens::nn
