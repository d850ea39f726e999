#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "peacelens/nn/adam.hpp"
#include "peacelens/nn/network.hpp"
#include "peacelens/nn/weights.hpp"

namespace peacelens::nn {

/// Examples as rows, labels in {0, 1}.
template <typename Scalar>
struct Dataset {
  Batch<Scalar> features;
  Eigen::VectorXi labels;

  Eigen::Index size() const { return labels.size(); }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> test_loss;
  std::optional<double> test_accuracy;
};

using TrainingHistory = std::vector<EpochRecord>;

template <typename Scalar>
struct TrainResult {
  ModelWeights<Scalar> weights;
  TrainingHistory history;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

namespace detail {

inline std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id, bool deterministic) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32), id};
  if (!deterministic) {
    std::random_device rd;
    words.push_back(rd());
    words.push_back(rd());
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

template <typename Scalar>
void check_dataset(const NetworkSpec& spec, const Dataset<Scalar>& data) {
  if (data.size() == 0) throw std::invalid_argument("dataset is empty");
  if (data.features.rows() != data.size())
    throw ShapeMismatch("feature rows and label count differ");
  if (data.features.cols() != spec.input_length)
    throw ShapeMismatch("dataset feature width does not match the network input");
  for (Eigen::Index i = 0; i < data.size(); ++i)
    if (data.labels(i) != 0 && data.labels(i) != 1)
      throw std::invalid_argument("labels must be 0 or 1");
}

}  // namespace detail

/// Loss and accuracy in inference mode, processed in fixed-size chunks.
template <typename Scalar>
Evaluation evaluate(const NetworkSpec& spec, const ModelWeights<Scalar>& weights,
                    const Dataset<Scalar>& data, Eigen::Index chunk = 64) {
  detail::check_dataset(spec, data);
  double loss = 0.0;
  Eigen::Index correct = 0;
  for (Eigen::Index start = 0; start < data.size(); start += chunk) {
    const Eigen::Index n = std::min(chunk, data.size() - start);
    Batch<Scalar> x = data.features.middleRows(start, n);
    const Vector<Scalar> p = predict_batch(spec, weights, x);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int y = data.labels(start + i);
      loss += bce_loss(static_cast<double>(p(i)), y);
      correct += decide(static_cast<double>(p(i))) == y ? 1 : 0;
    }
  }
  const auto total = static_cast<double>(data.size());
  return {loss / total, static_cast<double>(correct) / total};
}

/// Minibatch Adam on binary cross-entropy. Batches follow a fresh seeded
/// Fisher-Yates permutation every epoch; the final batch may be short.
template <typename Scalar>
TrainResult<Scalar> train(const NetworkSpec& spec, const Dataset<Scalar>& train_set,
                          const TrainingConfig& cfg,
                          const Dataset<Scalar>* test_set = nullptr,
                          const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  validate(spec);
  cfg.validate();
  detail::check_dataset(spec, train_set);
  if (test_set) detail::check_dataset(spec, *test_set);

  auto init_rng = detail::stream(cfg.seed, 0, true);
  auto shuffle_rng = detail::stream(cfg.seed, 1, cfg.deterministic);
  auto dropout_rng = detail::stream(cfg.seed, 2, cfg.deterministic);

  TrainResult<Scalar> result{glorot_init<Scalar>(spec, init_rng), {}};
  auto& weights = result.weights;
  AdamState<Scalar> adam(weights.size());

  const Eigen::Index n = train_set.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  Batch<Scalar> x;
  Eigen::VectorXi y;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (Eigen::Index i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<Eigen::Index> pick(0, i);
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(pick(shuffle_rng))]);
    }

    double loss_sum = 0.0;
    Eigen::Index correct = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index b = std::min<Eigen::Index>(cfg.batch_size, n - start);
      x.resize(b, train_set.features.cols());
      y.resize(b);
      for (Eigen::Index r = 0; r < b; ++r) {
        const Eigen::Index src = order[static_cast<std::size_t>(start + r)];
        x.row(r) = train_set.features.row(src);
        y(r) = train_set.labels(src);
      }
      auto cache = forward(spec, weights, x, true, dropout_rng);
      const Vector<Scalar> p = cache.probabilities();
      loss_sum += batch_loss(p, y) * static_cast<double>(b);
      for (Eigen::Index r = 0; r < b; ++r)
        correct += decide(static_cast<double>(p(r))) == y(r) ? 1 : 0;
      const auto grads = backward(spec, weights, cache, y);
      adam_step(weights, grads, adam, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (test_set) {
      const Evaluation ev = evaluate(spec, weights, *test_set);
      rec.test_loss = ev.loss;
      rec.test_accuracy = ev.accuracy;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return result;
}

}  // namespace peacelens::nn
