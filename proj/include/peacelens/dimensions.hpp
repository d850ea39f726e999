#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace peacelens {

enum class PeaceDimension {
  CompassionContempt,
  NewsOpinion,
  PreventionPromotion,
  OrderCreativity,
  NuanceSimplistic
};

inline constexpr std::size_t kDimensionCount = 5;

inline constexpr std::array<PeaceDimension, kDimensionCount> kDimensions = {
    PeaceDimension::CompassionContempt, PeaceDimension::NewsOpinion,
    PeaceDimension::PreventionPromotion, PeaceDimension::OrderCreativity,
    PeaceDimension::NuanceSimplistic};

inline constexpr std::size_t index(PeaceDimension d) { return static_cast<std::size_t>(d); }

/// JSON key, e.g. "compassion_contempt".
constexpr std::string_view key(PeaceDimension d) {
  constexpr std::array<std::string_view, kDimensionCount> k = {
      "compassion_contempt", "news_opinion", "prevention_promotion", "order_creativity",
      "nuance_simplistic"};
  return k[index(d)];
}

/// Display label, e.g. "Compassion-Contempt".
constexpr std::string_view label(PeaceDimension d) {
  constexpr std::array<std::string_view, kDimensionCount> k = {
      "Compassion-Contempt", "News-Opinion", "Prevention-Promotion", "Order-Creativity",
      "Nuance-Simplistic"};
  return k[index(d)];
}

struct Poles {
  std::string_view first;
  std::string_view second;
};

constexpr Poles poles(PeaceDimension d) {
  constexpr std::array<Poles, kDimensionCount> p = {{{"compassion", "contempt"},
                                                     {"news", "opinion"},
                                                     {"prevention", "promotion"},
                                                     {"order", "creativity"},
                                                     {"nuance", "simplistic"}}};
  return p[index(d)];
}

/// Which pole a score of 5 stands for.
enum class Orientation { FirstPoleHigh, SecondPoleHigh };

using OrientationTable = std::array<Orientation, kDimensionCount>;

inline constexpr OrientationTable kDefaultOrientation = {
    Orientation::FirstPoleHigh, Orientation::FirstPoleHigh, Orientation::FirstPoleHigh,
    Orientation::FirstPoleHigh, Orientation::FirstPoleHigh};

/// Accepts keys, labels, either pole order, any case, '-', '_' or ' ' between
/// the poles ("Opinion-News" resolves to NewsOpinion).
std::optional<PeaceDimension> parse_dimension(std::string_view text);

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;

}  // namespace peacelens
