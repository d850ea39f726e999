#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "peacelens/nn/embedding_vector.hpp"
#include "peacelens/nn/train.hpp"

namespace peacelens::corpus {

struct LabeledExample {
  std::string id;
  nn::EmbeddingVector embedding;
  int label = 0;
  std::string country;
  std::string text;  // raw text; empty for synthetic examples
};

struct SyntheticCorpusConfig {
  int countries = 16;
  int articles_per_country = 100;
  double separation = 2.0;
  /// Per-coordinate standard deviation of the article noise.
  double noise_sigma = 1.0;
  std::uint64_t seed = 42;
};

/// Country centres are uniform on the unit sphere. The class offset is
/// +-separation/2 along a fixed unit direction that does not depend on the
/// seed, so corpora with different seeds share the same peace axis. The first
/// half of the countries are high-peace. Countries get user-assigned ISO codes
/// (XA, XB, ...).
std::vector<LabeledExample> generate_synthetic_corpus(const SyntheticCorpusConfig& cfg);

/// The shared class direction used by the generator.
const Eigen::VectorXd& synthetic_peace_direction();

// "PLDS" | u16 version | u32 count | per example: id, country, text as
// (u32 length, bytes), u8 label, 1536 little-endian float64.
void save_dataset(const std::filesystem::path& path, std::span<const LabeledExample> examples);
std::vector<LabeledExample> load_dataset(const std::filesystem::path& path);

template <typename Scalar>
nn::Dataset<Scalar> to_dataset(std::span<const LabeledExample> examples) {
  nn::Dataset<Scalar> d;
  d.features.resize(static_cast<Eigen::Index>(examples.size()), nn::kEmbeddingDim);
  d.labels.resize(static_cast<Eigen::Index>(examples.size()));
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    d.features.row(r) = examples[i].embedding.values().transpose().template cast<Scalar>();
    d.labels(r) = examples[i].label;
  }
  return d;
}

}  // namespace peacelens::corpus
