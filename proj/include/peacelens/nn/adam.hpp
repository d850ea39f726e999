#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "peacelens/nn/weights.hpp"

namespace peacelens::nn {

struct TrainingConfig {
  int epochs = 10;
  int batch_size = 32;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 42;
  /// When false, shuffling and dropout also draw from std::random_device.
  bool deterministic = true;

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
      throw std::invalid_argument("Adam betas must lie in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
  }
};

class NonFiniteGradient : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename Scalar>
struct AdamState {
  Vector<Scalar> first_moment;
  Vector<Scalar> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  explicit AdamState(Eigen::Index n)
      : first_moment(Vector<Scalar>::Zero(n)), second_moment(Vector<Scalar>::Zero(n)) {}
};

/// One bias-corrected Adam update. Rejects the step (leaving weights and
/// state untouched) if any gradient entry is non-finite.
template <typename Scalar>
void adam_step(ModelWeights<Scalar>& weights, const ModelWeights<Scalar>& grads,
               AdamState<Scalar>& state, const TrainingConfig& cfg) {
  const Eigen::Index n = weights.size();
  if (grads.size() != n || state.first_moment.size() != n ||
      state.second_moment.size() != n)
    throw ShapeMismatch("Adam: parameter, gradient and moment sizes differ");
  if (!grads.flat().allFinite())
    throw NonFiniteGradient("Adam: gradient contains non-finite entries");

  const std::uint64_t t = state.step + 1;
  const Scalar b1 = static_cast<Scalar>(cfg.adam_beta1);
  const Scalar b2 = static_cast<Scalar>(cfg.adam_beta2);
  const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t)));
  const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t)));
  const Scalar lr = static_cast<Scalar>(cfg.learning_rate);
  const Scalar eps = static_cast<Scalar>(cfg.adam_epsilon);

  const auto& g = grads.flat();
  auto& m = state.first_moment;
  auto& v = state.second_moment;
  m = b1 * m + (Scalar(1) - b1) * g;
  v = b2 * v + (Scalar(1) - b2) * g.cwiseAbs2();
  weights.flat().array() -=
      lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  state.step = t;
}

}  // namespace peacelens::nn
