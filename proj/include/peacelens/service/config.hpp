#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "peacelens/llm/prompt.hpp"

namespace peacelens::service {

/// live: real providers, credentials required. stub: deterministic offline
/// providers. mock: like stub, but LLM replies come from a fixture file.
enum class ProviderMode { Live, Stub, Mock };

std::string_view to_string(ProviderMode m);
ProviderMode parse_provider_mode(std::string_view text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8787;
  ProviderMode mode = ProviderMode::Stub;

  std::filesystem::path history_path = "peace_history.jsonl";  // empty: in memory only
  std::filesystem::path embedding_cache_path;                   // empty: in memory only
  std::filesystem::path checkpoint_path;                        // empty: /v1/classify answers 409
  std::filesystem::path mock_llm_fixtures;
  std::filesystem::path prompt_path;  // empty: built-in template
  std::filesystem::path valence_weights_path;

  std::string embed_endpoint = "https://api.openai.com/v1/embeddings";
  std::string embed_model = "text-embedding-3-small";
  std::string llm_endpoint = "https://api.openai.com/v1/chat/completions";
  std::string llm_model = "gpt-4o";
  std::string emotion_endpoint;
  std::string embed_api_key;
  std::string llm_api_key;

  double requests_per_minute = 120;  // incoming /v1/score and /v1/classify
  double llm_requests_per_minute = 60;
  double embed_requests_per_minute = 600;

  std::size_t max_transcript_chars = 200000;
  std::size_t max_classify_texts = 256;
  llm::ScoringMode default_scoring_mode = llm::ScoringMode::DualInput;
  /// Origin prefixes allowed by CORS; "*" allows any origin.
  std::vector<std::string> cors_origins{"chrome-extension://", "moz-extension://",
                                        "http://localhost", "http://127.0.0.1"};

  /// Throws ConfigError when live mode lacks credentials or a value is out of range.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

/// "key = value" lines; '#' starts a comment. Unknown keys are errors.
ServiceConfig parse_config(std::string_view text, ServiceConfig base = {});
ServiceConfig load_config_file(const std::filesystem::path& path, ServiceConfig base = {});

/// PEACE_MODE, PEACE_EMBED_API_KEY, PEACE_LLM_API_KEY and PEACE_EMOTION_ENDPOINT
/// override the file.
ServiceConfig apply_env(ServiceConfig cfg, const EnvLookup& env = process_env);

}  // namespace peacelens::service
