#pragma once

#include <span>
#include <vector>

#include "peacelens/corpus/dataset.hpp"
#include "peacelens/nn/checkpoint.hpp"
#include "peacelens/nn/network.hpp"

namespace peacelens::eval {

/// High-peace probabilities for each example, run in chunks of `chunk` rows.
template <typename Scalar>
std::vector<double> predict_examples(const nn::NetworkSpec& spec,
                                     const nn::ModelWeights<Scalar>& weights,
                                     std::span<const corpus::LabeledExample> examples,
                                     std::size_t chunk = 256) {
  std::vector<double> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    const auto part = examples.subspan(start, std::min(chunk, examples.size() - start));
    const auto p = nn::predict_batch(spec, weights, corpus::to_dataset<Scalar>(part).features);
    for (Eigen::Index i = 0; i < p.size(); ++i) out.push_back(static_cast<double>(p(i)));
  }
  return out;
}

inline std::vector<double> predict_examples(const nn::Checkpoint& ck,
                                            std::span<const corpus::LabeledExample> examples,
                                            std::size_t chunk = 256) {
  return std::visit(
      [&](const auto& w) { return predict_examples(ck.spec, w, examples, chunk); }, ck.weights);
}

}  // namespace peacelens::eval
