#include "peacelens/service/service.hpp"

#include <chrono>
#include <charconv>

#include "peacelens/eval/stats.hpp"
#include "peacelens/nn/network.hpp"
#include "peacelens/util/digest.hpp"
#include "peacelens/util/http.hpp"
#include "peacelens/util/log.hpp"
#include "peacelens/util/utf8.hpp"

namespace peacelens::service {

using nlohmann::json;

Response error_response(int status, const std::string& kind, const std::string& message,
                        bool retryable) {
  Response r;
  r.status = status;
  r.body = json{{"error_kind", kind}, {"message", message}, {"retryable", retryable}}.dump();
  return r;
}

namespace {

class RateLimitedEmbeddingProvider : public embedding::EmbeddingProvider {
 public:
  RateLimitedEmbeddingProvider(std::shared_ptr<embedding::EmbeddingProvider> inner,
                               double per_minute)
      : inner_(std::move(inner)), limiter_(per_minute) {}
  std::vector<double> embed(const std::string& model_id, const std::string& text) override {
    limiter_.acquire();
    return inner_->embed(model_id, text);
  }
  std::size_t max_input_bytes() const override { return inner_->max_input_bytes(); }

 private:
  std::shared_ptr<embedding::EmbeddingProvider> inner_;
  util::RateLimiter limiter_;
};

std::int64_t now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

const std::string& require_string(const json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string())
    throw ServiceError(400, "invalid_request", std::string("'") + key + "' must be a string",
                       false);
  return body[key].get_ref<const std::string&>();
}

std::size_t query_number(const std::map<std::string, std::string>& q, const char* key,
                         std::size_t fallback) {
  auto it = q.find(key);
  if (it == q.end() || it->second.empty()) return fallback;
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc{} || p != it->second.data() + it->second.size())
    throw ServiceError(400, "invalid_request",
                       std::string("'") + key + "' must be a non-negative integer", false);
  return v;
}

bool is_blank(const std::string& s) {
  for (char32_t c : util::decode_utf8(s))
    if (!util::is_unicode_space(c)) return false;
  return true;
}

}  // namespace

Components build_components(const ServiceConfig& cfg) {
  Components c;
  auto cache = cfg.embedding_cache_path.empty()
                   ? std::make_shared<embedding::EmbeddingCache>()
                   : std::make_shared<embedding::EmbeddingCache>(cfg.embedding_cache_path);
  c.embed_model = cfg.embed_model;
  if (!cfg.prompt_path.empty()) c.prompt = llm::PromptTemplate::load(cfg.prompt_path);
  if (!cfg.valence_weights_path.empty())
    c.weights = emotion::ValenceWeights::load(cfg.valence_weights_path);
  if (!cfg.checkpoint_path.empty()) c.checkpoint = nn::load_checkpoint(cfg.checkpoint_path);

  if (cfg.mode == ProviderMode::Live) {
    embedding::HttpEmbeddingConfig ec;
    ec.endpoint = cfg.embed_endpoint;
    ec.api_key = cfg.embed_api_key;
    c.gateway = std::make_shared<embedding::EmbeddingGateway>(
        std::make_shared<RateLimitedEmbeddingProvider>(
            std::make_shared<embedding::HttpEmbeddingProvider>(ec), cfg.embed_requests_per_minute),
        cache);
    if (!cfg.emotion_endpoint.empty()) {
      emotion::HttpEmotionConfig hc;
      hc.endpoint = cfg.emotion_endpoint;
      c.emotion = std::make_shared<emotion::HttpEmotionSource>(hc);
    } else {
      util::log_warn("no emotion endpoint configured; using the offline lexicon");
      c.emotion = std::make_shared<emotion::LexiconEmotionSource>();
    }
    llm::HttpLlmConfig lc;
    lc.endpoint = cfg.llm_endpoint;
    lc.api_key = cfg.llm_api_key;
    lc.model_id = cfg.llm_model;
    c.llm = std::make_shared<llm::HttpLlmProvider>(
        lc, std::make_shared<util::RateLimiter>(cfg.llm_requests_per_minute));
    return c;
  }

  c.gateway = std::make_shared<embedding::EmbeddingGateway>(
      std::make_shared<embedding::StubEmbeddingProvider>(), cache);
  c.emotion = std::make_shared<emotion::LexiconEmotionSource>();
  auto mock = std::make_shared<llm::MockLlmProvider>();
  if (cfg.mode == ProviderMode::Mock) mock->load_jsonl(cfg.mock_llm_fixtures);
  c.llm = std::move(mock);
  return c;
}

PeaceService::PeaceService(ServiceConfig cfg, Components components,
                           std::shared_ptr<HistoryStore> store, Clock clock)
    : cfg_(std::move(cfg)),
      c_(std::move(components)),
      store_(store ? std::move(store) : std::make_shared<HistoryStore>()),
      clock_(clock ? std::move(clock) : Clock(now_ms)),
      limiter_(cfg_.requests_per_minute) {
  if (!c_.gateway || !c_.emotion || !c_.llm)
    throw std::invalid_argument("service components are incomplete");
  if (c_.checkpoint && (c_.checkpoint->spec.input_length != nn::kEmbeddingDim))
    throw std::invalid_argument("checkpoint input length is not the embedding dimension");
}

std::unique_ptr<PeaceService> PeaceService::from_config(const ServiceConfig& cfg) {
  cfg.validate();
  auto store = cfg.history_path.empty() ? std::make_shared<HistoryStore>()
                                        : std::make_shared<HistoryStore>(cfg.history_path);
  return std::make_unique<PeaceService>(cfg, build_components(cfg), std::move(store));
}

double PeaceService::classify_one(const nn::EmbeddingVector& v) const {
  return std::visit(
      [&](const auto& w) { return nn::predict(c_.checkpoint->spec, w, v.values()); },
      c_.checkpoint->weights);
}

std::shared_ptr<const ScoreRecord> PeaceService::run_pipeline(const std::string& video_id,
                                                              const std::string& session_id,
                                                              const std::string& transcript,
                                                              const std::string& digest,
                                                              llm::ScoringMode mode) {
  ++pipeline_runs_;
  ScoreRecord rec;
  rec.video_id = video_id;
  rec.session_id = session_id;
  rec.transcript_digest = digest;
  rec.emotion = emotion::analyze_transcript(transcript, *c_.emotion, c_.weights);
  llm::Transcript t{video_id, transcript, rec.emotion};
  rec.scores = llm::score_transcript(t, *c_.llm, c_.prompt, mode);
  if (c_.checkpoint)
    rec.news_probability =
        classify_one(c_.gateway->embed_text({video_id, transcript, c_.embed_model}));
  rec.scored_at_ms = clock_();
  return store_->insert(std::move(rec));
}

Response PeaceService::handle_score(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "invalid_request", "body must be an object", false);
  const std::string& video_id = require_string(body, "video_id");
  if (video_id.empty()) throw ServiceError(400, "invalid_request", "video_id is empty", false);
  const std::string& transcript = require_string(body, "transcript");
  if (is_blank(transcript))
    throw ServiceError(400, "empty_transcript", "transcript is empty", false);
  const std::size_t chars = util::decode_utf8(transcript).size();
  if (chars > cfg_.max_transcript_chars)
    throw ServiceError(400, "transcript_too_large",
                       "transcript has " + std::to_string(chars) + " characters; the limit is " +
                           std::to_string(cfg_.max_transcript_chars),
                       false);
  llm::ScoringMode mode = cfg_.default_scoring_mode;
  if (body.contains("mode")) {
    try {
      mode = llm::parse_mode(body["mode"].get<std::string>());
    } catch (const std::exception&) {
      throw ServiceError(400, "invalid_request", "mode must be text_only or dual_input", false);
    }
  }
  const std::string session_id = body.value("session_id", "");
  const std::string digest = util::sha256_hex(transcript);

  auto respond = [](const ScoreRecord& r, bool cached) {
    json j = r.to_json();
    j["cached"] = cached;
    Response res;
    res.body = j.dump();
    return res;
  };
  if (auto hit = store_->find(video_id, digest)) return respond(*hit, true);

  // Concurrent duplicates wait for the first request instead of spending twice.
  const auto key = std::make_pair(video_id, digest);
  std::promise<std::shared_ptr<const ScoreRecord>> promise;
  std::shared_future<std::shared_ptr<const ScoreRecord>> fut;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mu_);
    if (auto hit = store_->find(video_id, digest)) return respond(*hit, true);
    if (auto it = inflight_.find(key); it != inflight_.end()) {
      fut = it->second;
    } else {
      if (!limiter_.try_acquire())
        throw ServiceError(429, "rate_limited", "too many scoring requests; retry shortly", true);
      fut = promise.get_future().share();
      inflight_.emplace(key, fut);
      owner = true;
    }
  }
  if (!owner) return respond(*fut.get(), true);
  try {
    auto rec = run_pipeline(video_id, session_id, transcript, digest, mode);
    promise.set_value(rec);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  }
  return respond(*fut.get(), false);
}

Response PeaceService::handle_classify(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "invalid_request", "body must be an object", false);
  if (!body.contains("texts") || !body["texts"].is_array() || body["texts"].empty())
    throw ServiceError(400, "invalid_request", "'texts' must be a non-empty array", false);
  const auto& texts = body["texts"];
  if (texts.size() > cfg_.max_classify_texts)
    throw ServiceError(400, "too_many_texts",
                       "at most " + std::to_string(cfg_.max_classify_texts) + " texts per request",
                       false);
  std::vector<std::string> countries;
  if (body.contains("countries")) {
    if (!body["countries"].is_array() || body["countries"].size() != texts.size())
      throw ServiceError(400, "invalid_request", "'countries' must match 'texts' in length", false);
    for (const auto& c : body["countries"]) {
      if (!c.is_string() || c.get_ref<const std::string&>().empty())
        throw ServiceError(400, "invalid_request", "country codes must be non-empty strings",
                           false);
      countries.push_back(c.get<std::string>());
    }
  }
  std::vector<embedding::EmbeddingRequest> reqs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (!texts[i].is_string() || is_blank(texts[i].get_ref<const std::string&>()))
      throw ServiceError(400, "invalid_request",
                         "text " + std::to_string(i) + " is empty or not a string", false);
    reqs.push_back({std::to_string(i), texts[i].get<std::string>(), c_.embed_model});
  }
  if (!c_.checkpoint)
    throw ServiceError(409, "no_checkpoint", "no classifier checkpoint is loaded", false);
  if (!limiter_.try_acquire())
    throw ServiceError(429, "rate_limited", "too many requests; retry shortly", true);

  const auto batch = c_.gateway->embed_batch(reqs);
  if (!batch.errors.empty())
    throw ServiceError(502, "embedding_provider_error",
                       "text " + batch.errors.begin()->first + ": " + batch.errors.begin()->second,
                       true);
  json results = json::array();
  std::vector<double> probs;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const double p = classify_one(batch.vectors.at(std::to_string(i)));
    probs.push_back(p);
    json r{{"index", i}, {"probability", p}, {"label", nn::decide(p) ? "high" : "low"}};
    if (!countries.empty()) r["country"] = countries[i];
    results.push_back(std::move(r));
  }
  json out{{"architecture", nn::to_string(c_.checkpoint->spec.architecture)},
           {"results", std::move(results)}};
  if (!countries.empty()) {
    json agg = json::array();
    for (const auto& v : eval::country_level_classify(eval::group_by_country(countries, probs)))
      agg.push_back({{"country", v.country},
                     {"mean_probability", v.mean_probability},
                     {"label", v.label ? "high" : "low"},
                     {"articles", v.articles}});
    out["countries"] = std::move(agg);
  }
  Response res;
  res.body = out.dump();
  return res;
}

Response PeaceService::handle_history(const std::map<std::string, std::string>& query) {
  auto find = [&](const char* k) -> std::string {
    auto it = query.find(k);
    return it == query.end() ? "" : it->second;
  };
  const std::string video = find("video_id");
  const std::string session = find("session");
  if (video.empty() == session.empty())
    throw ServiceError(400, "invalid_request", "pass exactly one of video_id or session", false);
  const std::size_t offset = query_number(query, "offset", 0);
  const std::size_t limit = query_number(query, "limit", 50);
  if (limit == 0 || limit > 500)
    throw ServiceError(400, "invalid_request", "limit must be between 1 and 500", false);
  const auto page =
      video.empty() ? store_->by_session(session, offset, limit) : store_->by_video(video, offset, limit);
  json records = json::array();
  for (const auto& r : page.records) records.push_back(r->to_json());
  Response res;
  res.body = json{{"records", std::move(records)},
                  {"next_offset", page.next_offset ? json(*page.next_offset) : json(nullptr)}}
                 .dump();
  return res;
}

void PeaceService::cors(const Request& req, Response& res) const {
  auto it = req.headers.find("origin");
  if (it == req.headers.end()) return;
  for (const auto& allowed : cfg_.cors_origins) {
    if (allowed == "*" || it->second.rfind(allowed, 0) == 0) {
      res.headers["Access-Control-Allow-Origin"] = allowed == "*" ? "*" : it->second;
      res.headers["Vary"] = "Origin";
      res.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
      res.headers["Access-Control-Allow-Headers"] = "Content-Type";
      return;
    }
  }
}

Response PeaceService::handle(const Request& req) {
  Response res;
  try {
    if (req.method == "OPTIONS") {
      res.status = 204;
      res.content_type.clear();
    } else if (req.path == "/healthz") {
      if (req.method != "GET") throw ServiceError(405, "method_not_allowed", "use GET", false);
      res.content_type = "text/plain";
      res.body = "ok";
    } else if (req.path == "/v1/history") {
      if (req.method != "GET") throw ServiceError(405, "method_not_allowed", "use GET", false);
      res = handle_history(req.query);
    } else if (req.path == "/v1/score" || req.path == "/v1/classify") {
      if (req.method != "POST") throw ServiceError(405, "method_not_allowed", "use POST", false);
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::parse_error& e) {
        throw ServiceError(400, "invalid_json", e.what(), false);
      }
      res = req.path == "/v1/score" ? handle_score(body) : handle_classify(body);
    } else {
      throw ServiceError(404, "not_found", "no route for " + req.path, false);
    }
  } catch (const ServiceError& e) {
    res = error_response(e.status, e.kind, e.what(), e.retryable);
  } catch (const json::exception& e) {
    res = error_response(400, "invalid_request", e.what(), false);
  } catch (const emotion::EmotionEndpointError& e) {
    res = error_response(502, "emotion_provider_error", e.what(), true);
  } catch (const llm::ScoringFailed& e) {
    res = error_response(502, "llm_invalid_response", e.what(), true);
  } catch (const llm::LlmProviderError& e) {
    res = error_response(502, "llm_provider_error", e.what(), e.retryable());
  } catch (const embedding::ProviderError& e) {
    res = error_response(502, "embedding_provider_error", e.what(), e.retryable());
  } catch (const util::TransportError& e) {
    res = error_response(502, "transport_error", e.what(), true);
  } catch (const std::exception& e) {
    util::log_warn(std::string("internal error: ") + e.what());
    res = error_response(500, "internal_error", e.what(), false);
  }
  cors(req, res);
  return res;
}

}  // namespace peacelens::service
