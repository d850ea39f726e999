#include "peacelens/service/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace peacelens::service {

std::string_view to_string(ProviderMode m) {
  switch (m) {
    case ProviderMode::Live: return "live";
    case ProviderMode::Stub: return "stub";
    case ProviderMode::Mock: return "mock";
  }
  return "?";
}

ProviderMode parse_provider_mode(std::string_view text) {
  if (text == "live") return ProviderMode::Live;
  if (text == "stub") return ProviderMode::Stub;
  if (text == "mock") return ProviderMode::Mock;
  throw ConfigError("mode must be live, stub or mock, got '" + std::string(text) + "'");
}

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) throw ConfigError("port out of range");
  if (max_transcript_chars == 0) throw ConfigError("max_transcript_chars must be positive");
  if (max_classify_texts == 0) throw ConfigError("max_classify_texts must be positive");
  if (requests_per_minute < 0 || llm_requests_per_minute < 0 || embed_requests_per_minute < 0)
    throw ConfigError("rate limits cannot be negative");
  if (mode == ProviderMode::Live) {
    if (embed_api_key.empty()) throw ConfigError("live mode needs PEACE_EMBED_API_KEY");
    if (llm_api_key.empty()) throw ConfigError("live mode needs PEACE_LLM_API_KEY");
  }
  if (mode == ProviderMode::Mock && mock_llm_fixtures.empty())
    throw ConfigError("mock mode needs mock_llm_fixtures");
}

std::optional<std::string> process_env(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T number(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError(key + ": not a number: '" + v + "'");
  return out;
}

}  // namespace

ServiceConfig parse_config(std::string_view text, ServiceConfig cfg) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string k = trim(std::string_view(t).substr(0, eq));
    const std::string v = trim(std::string_view(t).substr(eq + 1));
    if (k == "host") cfg.host = v;
    else if (k == "port") cfg.port = number<int>(k, v);
    else if (k == "mode") cfg.mode = parse_provider_mode(v);
    else if (k == "history_path") cfg.history_path = v;
    else if (k == "embedding_cache_path") cfg.embedding_cache_path = v;
    else if (k == "checkpoint") cfg.checkpoint_path = v;
    else if (k == "mock_llm_fixtures") cfg.mock_llm_fixtures = v;
    else if (k == "prompt_file") cfg.prompt_path = v;
    else if (k == "valence_weights") cfg.valence_weights_path = v;
    else if (k == "embed_endpoint") cfg.embed_endpoint = v;
    else if (k == "embed_model") cfg.embed_model = v;
    else if (k == "llm_endpoint") cfg.llm_endpoint = v;
    else if (k == "llm_model") cfg.llm_model = v;
    else if (k == "emotion_endpoint") cfg.emotion_endpoint = v;
    else if (k == "requests_per_minute") cfg.requests_per_minute = number<double>(k, v);
    else if (k == "llm_requests_per_minute") cfg.llm_requests_per_minute = number<double>(k, v);
    else if (k == "embed_requests_per_minute") cfg.embed_requests_per_minute = number<double>(k, v);
    else if (k == "max_transcript_chars") cfg.max_transcript_chars = number<std::size_t>(k, v);
    else if (k == "max_classify_texts") cfg.max_classify_texts = number<std::size_t>(k, v);
    else if (k == "default_scoring_mode") cfg.default_scoring_mode = llm::parse_mode(v);
    else if (k == "cors_origins") {
      cfg.cors_origins.clear();
      std::istringstream parts(v);
      for (std::string o; std::getline(parts, o, ',');)
        if (auto s = trim(o); !s.empty()) cfg.cors_origins.push_back(s);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + k + "'");
    }
  }
  return cfg;
}

ServiceConfig load_config_file(const std::filesystem::path& path, ServiceConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

ServiceConfig apply_env(ServiceConfig cfg, const EnvLookup& env) {
  if (auto v = env("PEACE_MODE")) cfg.mode = parse_provider_mode(*v);
  if (auto v = env("PEACE_EMBED_API_KEY")) cfg.embed_api_key = *v;
  if (auto v = env("PEACE_LLM_API_KEY")) cfg.llm_api_key = *v;
  if (auto v = env("PEACE_EMOTION_ENDPOINT")) cfg.emotion_endpoint = *v;
  return cfg;
}

}  // namespace peacelens::service
