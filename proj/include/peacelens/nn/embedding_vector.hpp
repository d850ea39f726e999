#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

#include "peacelens/nn/network_spec.hpp"

namespace peacelens::nn {

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A 1536-wide embedding with finite entries. Values are kept in double so
/// unit-norm vectors stay unit-norm to well below float resolution.
class EmbeddingVector {
 public:
  EmbeddingVector() : values_(Eigen::VectorXd::Zero(kEmbeddingDim)) {}

  explicit EmbeddingVector(Eigen::VectorXd values) : values_(std::move(values)) {
    if (values_.size() != kEmbeddingDim)
      throw DimensionMismatch("embedding has " + std::to_string(values_.size()) +
                              " values, expected " + std::to_string(kEmbeddingDim));
    if (!values_.allFinite()) throw std::invalid_argument("embedding has non-finite entries");
  }

  const Eigen::VectorXd& values() const { return values_; }
  double operator()(Eigen::Index i) const { return values_(i); }
  Eigen::Index size() const { return values_.size(); }

  friend bool operator==(const EmbeddingVector& a, const EmbeddingVector& b) {
    return a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
};

}  // namespace peacelens::nn
