#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "peacelens/dimensions.hpp"
#include "peacelens/llm/prompt.hpp"
#include "peacelens/util/rate_limiter.hpp"

namespace peacelens::llm {

struct DimensionScoreSet {
  std::array<int, kDimensionCount> scores{};
  std::array<std::string, kDimensionCount> rationales;
  std::string prompt_version;
  std::string model_id;
  ScoringMode mode = ScoringMode::TextOnly;

  int score(PeaceDimension d) const { return scores[index(d)]; }
  nlohmann::json to_json() const;
  static DimensionScoreSet from_json(const nlohmann::json& j);
  friend bool operator==(const DimensionScoreSet&, const DimensionScoreSet&) = default;
};

class ResponseParseError : public std::runtime_error {
 public:
  enum class Kind { NoJsonFound, MissingDimension, OutOfRange, NonInteger };
  ResponseParseError(Kind kind, std::optional<PeaceDimension> dim, std::string detail,
                     std::optional<double> value = std::nullopt);
  Kind kind() const { return kind_; }
  std::optional<PeaceDimension> dimension() const { return dim_; }
  std::optional<double> value() const { return value_; }

 private:
  Kind kind_;
  std::optional<PeaceDimension> dim_;
  std::optional<double> value_;
};

std::string_view to_string(ResponseParseError::Kind k);

struct ParsedScores {
  std::array<int, kDimensionCount> scores{};
  std::array<std::string, kDimensionCount> rationales;
};

/// First balanced {...} in `raw` that parses as a JSON object, or nullopt.
std::optional<nlohmann::json> extract_first_json_object(std::string_view raw);

/// Scores are integers 1..5 (integral floats such as 4.0 are accepted).
/// Rationales may come as a "rationale" object keyed by dimension, as
/// "<key>_rationale" strings, or as {"score": n, "rationale": "..."} values.
ParsedScores parse_response(std::string_view raw);

struct LlmRequest {
  std::string transcript_id;
  std::string prompt;
  int attempt = 0;  // 0 for the first call, then corrective retries
};

class LlmProviderError : public std::runtime_error {
 public:
  LlmProviderError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(const LlmRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

/// Canned responses keyed by transcript id, from JSONL lines
/// {"transcript_id": ..., "responses": [...]} (or a single "response").
/// Attempt k gets responses[min(k, n - 1)]. Ids without a fixture get a
/// valid response derived from a hash of the prompt, unless strict.
class MockLlmProvider : public LlmProvider {
 public:
  explicit MockLlmProvider(std::string model_id = "mock-llm", bool strict = false)
      : model_id_(std::move(model_id)), strict_(strict) {}
  void load_jsonl(const std::filesystem::path& path);

  void add_fixture(std::string transcript_id, std::vector<std::string> responses);
  std::string complete(const LlmRequest& request) override;
  std::string model_id() const override { return model_id_; }
  std::size_t calls() const;
  static std::string fallback_response(std::string_view prompt);

 private:
  std::string model_id_;
  bool strict_;
  std::map<std::string, std::vector<std::string>> fixtures_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

struct HttpLlmConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key;  // PEACE_LLM_API_KEY
  std::string model_id = "gpt-4o";
  double temperature = 0.0;
  std::chrono::seconds timeout{120};
  int max_attempts = 3;  // transport-level retries
  std::chrono::milliseconds initial_backoff{1000};
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// OpenAI-compatible chat completions.
class HttpLlmProvider : public LlmProvider {
 public:
  HttpLlmProvider(HttpLlmConfig cfg, std::shared_ptr<util::RateLimiter> limiter = nullptr);
  std::string complete(const LlmRequest& request) override;
  std::string model_id() const override { return cfg_.model_id; }

 private:
  HttpLlmConfig cfg_;
  std::shared_ptr<util::RateLimiter> limiter_;
};

class ScoringFailed : public std::runtime_error {
 public:
  ScoringFailed(const std::string& what, std::vector<std::string> raw)
      : std::runtime_error(what), raw_responses_(std::move(raw)) {}
  const std::vector<std::string>& raw_responses() const { return raw_responses_; }

 private:
  std::vector<std::string> raw_responses_;
};

struct ScorerOptions {
  PromptOptions prompt;
  int corrective_retries = 2;
  std::size_t max_in_flight = 4;
};

struct Transcript {
  std::string id;
  std::string text;
  std::optional<emotion::TranscriptEmotionSummary> summary;  // required for DualInput
};

/// Builds the prompt, calls the provider and validates the reply. A reply
/// that fails to parse triggers a corrective re-prompt quoting the error.
DimensionScoreSet score_transcript(const Transcript& transcript, LlmProvider& provider,
                                   const PromptTemplate& tmpl, ScoringMode mode,
                                   const ScorerOptions& options = {});

std::string corrective_prompt(const std::string& prompt, const std::string& error);

struct BatchItem {
  std::string transcript_id;
  std::optional<DimensionScoreSet> scores;
  std::optional<std::string> error;
};

/// Results in input order; failures stay per item.
std::vector<BatchItem> batch_score(const std::vector<Transcript>& transcripts,
                                   LlmProvider& provider, const PromptTemplate& tmpl,
                                   ScoringMode mode, const ScorerOptions& options = {});

}  // namespace peacelens::llm
