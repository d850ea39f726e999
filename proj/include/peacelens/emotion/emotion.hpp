#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace peacelens::emotion {

inline constexpr std::size_t kCategoryCount = 28;

/// GoEmotions label order.
inline constexpr std::array<std::string_view, kCategoryCount> kCategories = {
    "admiration", "amusement",   "anger",       "annoyance", "approval",    "caring",
    "confusion",  "curiosity",   "desire",      "disappointment", "disapproval", "disgust",
    "embarrassment", "excitement", "fear",      "gratitude", "grief",       "joy",
    "love",       "nervousness", "optimism",    "pride",     "realization", "relief",
    "remorse",    "sadness",     "surprise",    "neutral"};

inline constexpr std::size_t kNeutral = 27;

/// Index of a category name, or nullopt.
std::optional<std::size_t> category_index(std::string_view name);

class SchemaError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct EmotionProfile {
  std::string chunk_id;
  std::array<double, kCategoryCount> scores{};

  /// Builds from a name -> score map; every category must be present, no
  /// extras, each score in [0, 1].
  static EmotionProfile from_map(const std::map<std::string, double>& scores,
                                 std::string chunk_id = {});
  static EmotionProfile from_json_text(std::string_view json_object, std::string chunk_id = {});
  void validate() const;

  double score(std::string_view category) const;
  /// Argmax category; ties favour neutral, then taxonomy order.
  std::size_t dominant() const;
};

struct ValenceWeights {
  std::array<double, kCategoryCount> weights{};

  /// +1 for the twelve positive categories, -1 for the ten negative ones, 0
  /// for neutral and the five epistemic/ambiguous ones.
  static ValenceWeights defaults();
  /// JSON map of all 28 categories to weights in [-1, 1]; neutral must be 0.
  static ValenceWeights from_json_text(std::string_view text);
  static ValenceWeights load(const std::filesystem::path& path);
  std::string to_json_text() const;
  void validate() const;
};

inline constexpr double kValenceEpsilon = 1e-9;

/// Normalised weighted mean of the scores, clamped to [-1, 1].
double map_valence(const EmotionProfile& profile, const ValenceWeights& weights);

struct TranscriptEmotionSummary {
  std::vector<double> chunk_valences;
  double mean_valence = 0.0;
  double volatility = 0.0;  // population standard deviation
  double neutrality_fraction = 0.0;
  std::vector<std::string> dominant_categories;
};

TranscriptEmotionSummary summarize(std::span<const double> valences,
                                   std::span<const EmotionProfile> profiles);

/// Splits after runs of . ? ! (plus trailing quotes/brackets) that are
/// followed by whitespace or the end of text. Common abbreviations, initialisms
/// like "U.S." and decimals do not end a sentence. Chunks are trimmed.
std::vector<std::string> chunk_transcript(std::string_view text);

class EmotionSource {
 public:
  virtual ~EmotionSource() = default;
  virtual std::vector<EmotionProfile> fetch(const std::vector<std::string>& chunks) = 0;
};

class EmotionEndpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct HttpEmotionConfig {
  std::string endpoint;  // PEACE_EMOTION_ENDPOINT
  std::size_t batch_size = 32;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{60};
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// POST {"texts": [...]} -> {"profiles": [{category: score} x 28, ...]}.
class HttpEmotionSource : public EmotionSource {
 public:
  explicit HttpEmotionSource(HttpEmotionConfig cfg);
  std::vector<EmotionProfile> fetch(const std::vector<std::string>& chunks) override;

 private:
  HttpEmotionConfig cfg_;
};

/// Precomputed profiles, one JSON object per line: {"chunk_index": i, "scores": {...}}.
class FileEmotionSource : public EmotionSource {
 public:
  explicit FileEmotionSource(std::filesystem::path path) : path_(std::move(path)) {}
  std::vector<EmotionProfile> fetch(const std::vector<std::string>& chunks) override;

 private:
  std::filesystem::path path_;
};

/// Offline keyword lexicon. Each emotion cue word adds mass to its category;
/// neutral keeps a fixed baseline so cue-free chunks are neutral-dominant.
class LexiconEmotionSource : public EmotionSource {
 public:
  std::vector<EmotionProfile> fetch(const std::vector<std::string>& chunks) override;
  static EmotionProfile profile_for(std::string_view chunk);
};

/// Fetches and checks one profile per chunk, in chunk order.
std::vector<EmotionProfile> fetch_profiles(const std::vector<std::string>& chunks,
                                           EmotionSource& source);

/// chunk -> fetch -> map -> summarize.
TranscriptEmotionSummary analyze_transcript(std::string_view text, EmotionSource& source,
                                            const ValenceWeights& weights);

}  // namespace peacelens::emotion
