#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "peacelens/dimensions.hpp"
#include "peacelens/eval/stats.hpp"

namespace peacelens::eval {

struct Rating {
  std::string video_id;
  std::string rater_id;
  PeaceDimension dimension;
  double score;
};

class GoldFormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sparse video x rater x dimension table of human scores in [1, 5].
class GoldStandard {
 public:
  /// Rejects scores outside [1, 5] and repeated (video, rater, dimension) cells.
  void add(std::string video_id, std::string rater_id, PeaceDimension dimension, double score);

  /// CSV with a header naming video_id, rater_id, dimension, score (any order).
  /// Empty or "NA" scores are missing cells. Lines starting with '#' are
  /// comments, except "# orientation <dimension>: 5=<pole>" and
  /// "# codebook <dimension>: <note>".
  static GoldStandard from_csv_text(std::string_view text);
  static GoldStandard load_csv(const std::filesystem::path& path);

  const std::vector<Rating>& ratings() const { return ratings_; }
  /// video -> mean over available raters.
  std::map<std::string, double> video_means(PeaceDimension d) const;
  /// rater -> video -> score.
  std::map<std::string, std::map<std::string, double>> by_rater(PeaceDimension d) const;

  OrientationTable orientation = kDefaultOrientation;
  std::array<std::string, kDimensionCount> codebook;

 private:
  std::vector<Rating> ratings_;
  std::map<std::tuple<std::string, std::string, PeaceDimension>, std::size_t> cells_;
};

struct DimensionStats {
  PeaceDimension dimension;
  std::size_t n = 0;  // videos with at least one rating
  std::optional<double> mean, sd, min, max, median;
};

std::vector<DimensionStats> aggregate_gold(const GoldStandard& gold);

struct PairReliability {
  std::string rater_a;
  std::string rater_b;
  std::size_t overlap = 0;
  Correlation r;
  std::optional<double> agreement;  // within one point
  bool insufficient = false;        // fewer than two co-rated videos
};

struct ReliabilityReport {
  PeaceDimension dimension;
  std::vector<std::string> raters;
  std::vector<PairReliability> pairs;
  std::optional<double> pooled_agreement;
  std::size_t pooled_observations = 0;

  /// r for (raters[i], raters[j]); the diagonal is 1.
  std::optional<double> r(std::size_t i, std::size_t j) const;
};

ReliabilityReport inter_rater_reliability(const GoldStandard& gold, PeaceDimension dimension);

class InsufficientOverlap : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class OrientationMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct CorrelationEntry {
  PeaceDimension dimension;
  std::string model_id;
  std::string mode;
  Correlation r;
};

/// Pearson r of model scores against per-video human means on the videos
/// both cover. Model and gold must use the same pole orientation.
CorrelationEntry model_vs_human(const std::map<std::string, double>& model_scores,
                                const GoldStandard& gold, PeaceDimension dimension,
                                std::string model_id, std::string mode,
                                Orientation model_orientation = Orientation::FirstPoleHigh);

}  // namespace peacelens::eval
