#include "peacelens/llm/scorer.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "peacelens/util/digest.hpp"
#include "peacelens/util/http.hpp"
#include "peacelens/util/log.hpp"

namespace peacelens::llm {

using nlohmann::json;

nlohmann::json DimensionScoreSet::to_json() const {
  json scores_j = json::object(), rationale_j = json::object();
  for (auto d : kDimensions) {
    scores_j[std::string(key(d))] = scores[index(d)];
    rationale_j[std::string(key(d))] = rationales[index(d)];
  }
  return {{"scores", scores_j},
          {"rationales", rationale_j},
          {"prompt_version", prompt_version},
          {"model_id", model_id},
          {"mode", std::string(to_string(mode))}};
}

DimensionScoreSet DimensionScoreSet::from_json(const nlohmann::json& j) {
  DimensionScoreSet s;
  for (auto d : kDimensions) {
    const int v = j.at("scores").at(std::string(key(d))).get<int>();
    if (v < kMinScore || v > kMaxScore) throw std::invalid_argument("stored score out of range");
    s.scores[index(d)] = v;
    if (j.contains("rationales") && j["rationales"].contains(std::string(key(d))))
      s.rationales[index(d)] = j["rationales"][std::string(key(d))].get<std::string>();
  }
  s.prompt_version = j.at("prompt_version").get<std::string>();
  s.model_id = j.at("model_id").get<std::string>();
  s.mode = parse_mode(j.at("mode").get<std::string>());
  return s;
}

std::string_view to_string(ResponseParseError::Kind k) {
  switch (k) {
    case ResponseParseError::Kind::NoJsonFound: return "NoJsonFound";
    case ResponseParseError::Kind::MissingDimension: return "MissingDimension";
    case ResponseParseError::Kind::OutOfRange: return "OutOfRange";
    case ResponseParseError::Kind::NonInteger: return "NonInteger";
  }
  return "?";
}

ResponseParseError::ResponseParseError(Kind kind, std::optional<PeaceDimension> dim,
                                       std::string detail, std::optional<double> value)
    : std::runtime_error(std::string(to_string(kind)) + ": " + detail),
      kind_(kind),
      dim_(dim),
      value_(value) {}

std::optional<nlohmann::json> extract_first_json_object(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        try {
          auto j = json::parse(raw.substr(start, i - start + 1));
          if (j.is_object()) return j;
        } catch (const json::parse_error&) {
        }
        break;
      }
    }
  }
  return std::nullopt;
}

ParsedScores parse_response(std::string_view raw) {
  using Kind = ResponseParseError::Kind;
  auto found = extract_first_json_object(raw);
  if (!found) throw ResponseParseError(Kind::NoJsonFound, std::nullopt, "no JSON object in reply");
  json obj = *found;
  if (obj.contains("scores") && obj["scores"].is_object()) {
    json merged = obj["scores"];
    for (const auto& [k, v] : obj.items())
      if (k != "scores") merged[k] = v;
    obj = merged;
  }
  // Map dimension -> value, accepting label spellings for keys.
  std::array<const json*, kDimensionCount> values{};
  const json* rationale_obj = nullptr;
  std::array<std::string, kDimensionCount> rationale_keyed;
  for (const auto& [k, v] : obj.items()) {
    if ((k == "rationale" || k == "rationales") && v.is_object()) {
      rationale_obj = &v;
      continue;
    }
    const std::string suffix = "_rationale";
    if (k.size() > suffix.size() && k.compare(k.size() - suffix.size(), suffix.size(), suffix) == 0) {
      if (auto d = parse_dimension(k.substr(0, k.size() - suffix.size())); d && v.is_string())
        rationale_keyed[index(*d)] = v.get<std::string>();
      continue;
    }
    if (auto d = parse_dimension(k); d && !values[index(*d)]) values[index(*d)] = &v;
  }
  ParsedScores out;
  for (auto d : kDimensions) {
    const std::string name(key(d));
    const json* v = values[index(d)];
    if (!v) throw ResponseParseError(Kind::MissingDimension, d, "missing \"" + name + "\"");
    if (v->is_object()) {
      if (v->contains("rationale") && (*v)["rationale"].is_string())
        out.rationales[index(d)] = (*v)["rationale"].get<std::string>();
      if (!v->contains("score"))
        throw ResponseParseError(Kind::MissingDimension, d, "\"" + name + "\" has no score");
      v = &(*v)["score"];
    }
    if (!v->is_number() || v->is_boolean())
      throw ResponseParseError(Kind::NonInteger, d, "\"" + name + "\" is not a number");
    const double x = v->get<double>();
    if (!std::isfinite(x) || std::floor(x) != x)
      throw ResponseParseError(Kind::NonInteger, d, "\"" + name + "\" is not an integer", x);
    if (x < kMinScore || x > kMaxScore)
      throw ResponseParseError(Kind::OutOfRange, d,
                               "\"" + name + "\" = " + v->dump() + " is outside 1..5", x);
    out.scores[index(d)] = static_cast<int>(x);
    if (out.rationales[index(d)].empty()) {
      if (rationale_obj && rationale_obj->contains(name) && (*rationale_obj)[name].is_string())
        out.rationales[index(d)] = (*rationale_obj)[name].get<std::string>();
      else
        out.rationales[index(d)] = rationale_keyed[index(d)];
    }
  }
  return out;
}

void MockLlmProvider::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read mock fixtures " + path.string());
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      std::vector<std::string> responses;
      if (j.contains("responses")) responses = j.at("responses").get<std::vector<std::string>>();
      else responses.push_back(j.at("response").get<std::string>());
      add_fixture(j.at("transcript_id").get<std::string>(), std::move(responses));
    } catch (const json::exception& e) {
      throw std::invalid_argument("mock fixture line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void MockLlmProvider::add_fixture(std::string transcript_id, std::vector<std::string> responses) {
  if (responses.empty()) throw std::invalid_argument("fixture needs at least one response");
  std::lock_guard lock(mu_);
  fixtures_[std::move(transcript_id)] = std::move(responses);
}

std::string MockLlmProvider::fallback_response(std::string_view prompt) {
  const auto h = util::sha256(prompt);
  json j = json::object(), r = json::object();
  for (auto d : kDimensions) {
    j[std::string(key(d))] = kMinScore + h[index(d)] % (kMaxScore - kMinScore + 1);
    r[std::string(key(d))] = "mock rationale";
  }
  j["rationale"] = r;
  return j.dump();
}

std::string MockLlmProvider::complete(const LlmRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  auto it = fixtures_.find(request.transcript_id);
  if (it == fixtures_.end()) {
    if (strict_) throw LlmProviderError("no mock fixture for '" + request.transcript_id + "'", false);
    return fallback_response(request.prompt);
  }
  const auto& rs = it->second;
  return rs[std::min<std::size_t>(static_cast<std::size_t>(request.attempt), rs.size() - 1)];
}

std::size_t MockLlmProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

HttpLlmProvider::HttpLlmProvider(HttpLlmConfig cfg, std::shared_ptr<util::RateLimiter> limiter)
    : cfg_(std::move(cfg)), limiter_(std::move(limiter)) {
  if (cfg_.api_key.empty()) throw std::runtime_error("live LLM mode needs PEACE_LLM_API_KEY");
  if (!cfg_.sleep) cfg_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  util::log_info("LLM provider " + cfg_.model_id + " temperature " +
                 std::to_string(cfg_.temperature));
}

std::string HttpLlmProvider::complete(const LlmRequest& request) {
  const json body{{"model", cfg_.model_id},
                  {"temperature", cfg_.temperature},
                  {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})}};
  auto delay = cfg_.initial_backoff;
  std::string last;
  for (int attempt = 1; attempt <= cfg_.max_attempts; ++attempt) {
    if (limiter_) limiter_->acquire();
    try {
      const auto res = util::post_json(cfg_.endpoint, body.dump(),
                                       {{"Authorization", "Bearer " + cfg_.api_key}}, cfg_.timeout);
      if (res.status == 200) {
        try {
          return json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
          throw LlmProviderError(std::string("unreadable completion: ") + e.what(), false);
        }
      }
      last = "HTTP " + std::to_string(res.status);
      if (!util::retryable_status(res.status)) throw LlmProviderError("LLM endpoint returned " + last, false);
    } catch (const util::TransportError& e) {
      last = e.what();
    }
    if (attempt < cfg_.max_attempts) {
      cfg_.sleep(delay);
      delay *= 2;
    }
  }
  throw LlmProviderError("LLM endpoint failed after " + std::to_string(cfg_.max_attempts) +
                             " attempts: " + last,
                         true);
}

std::string corrective_prompt(const std::string& prompt, const std::string& error) {
  return prompt +
         "\n\nYour previous reply could not be used (" + error +
         "). Reply again with only the JSON object: the five dimension keys, each an integer "
         "from 1 to 5, and the \"rationale\" object.";
}

DimensionScoreSet score_transcript(const Transcript& transcript, LlmProvider& provider,
                                   const PromptTemplate& tmpl, ScoringMode mode,
                                   const ScorerOptions& options) {
  const std::string prompt =
      build_prompt(transcript.text, tmpl, mode,
                   transcript.summary ? &*transcript.summary : nullptr, options.prompt);
  std::vector<std::string> raws;
  std::string last_error;
  for (int attempt = 0; attempt <= options.corrective_retries; ++attempt) {
    LlmRequest req{transcript.id, attempt == 0 ? prompt : corrective_prompt(prompt, last_error),
                   attempt};
    raws.push_back(provider.complete(req));
    try {
      const auto parsed = parse_response(raws.back());
      DimensionScoreSet s;
      s.scores = parsed.scores;
      s.rationales = parsed.rationales;
      s.prompt_version = tmpl.version;
      s.model_id = provider.model_id();
      s.mode = mode;
      return s;
    } catch (const ResponseParseError& e) {
      last_error = e.what();
    }
  }
  throw ScoringFailed("scoring '" + transcript.id + "' failed after " +
                          std::to_string(raws.size()) + " replies: " + last_error,
                      std::move(raws));
}

std::vector<BatchItem> batch_score(const std::vector<Transcript>& transcripts,
                                   LlmProvider& provider, const PromptTemplate& tmpl,
                                   ScoringMode mode, const ScorerOptions& options) {
  if (transcripts.empty()) throw std::invalid_argument("batch_score needs at least one transcript");
  if (options.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  std::vector<BatchItem> out(transcripts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < transcripts.size();) {
      out[i].transcript_id = transcripts[i].id;
      try {
        out[i].scores = score_transcript(transcripts[i], provider, tmpl, mode, options);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const std::size_t n = std::min(options.max_in_flight, transcripts.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace peacelens::llm
