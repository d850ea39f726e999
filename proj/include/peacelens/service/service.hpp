#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "json.hpp"
#include "peacelens/embedding/gateway.hpp"
#include "peacelens/emotion/emotion.hpp"
#include "peacelens/llm/prompt.hpp"
#include "peacelens/llm/scorer.hpp"
#include "peacelens/nn/checkpoint.hpp"
#include "peacelens/service/config.hpp"
#include "peacelens/service/history.hpp"
#include "peacelens/util/rate_limiter.hpp"

namespace peacelens::service {

/// Transport-neutral request; header names are lower case.
struct Request {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct Response {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Carried to the client as {error_kind, message, retryable}.
struct ServiceError : std::runtime_error {
  ServiceError(int status, std::string kind, const std::string& message, bool retryable)
      : std::runtime_error(message), status(status), kind(std::move(kind)), retryable(retryable) {}
  int status;
  std::string kind;
  bool retryable;
};

Response error_response(int status, const std::string& kind, const std::string& message,
                        bool retryable);

struct Components {
  std::shared_ptr<embedding::EmbeddingGateway> gateway;
  std::string embed_model{embedding::kDefaultModel};
  std::shared_ptr<emotion::EmotionSource> emotion;
  emotion::ValenceWeights weights = emotion::ValenceWeights::defaults();
  std::shared_ptr<llm::LlmProvider> llm;
  llm::PromptTemplate prompt = llm::PromptTemplate::builtin();
  std::optional<nn::Checkpoint> checkpoint;
};

/// Providers for the configured mode. Stub and mock modes never construct a
/// network client.
Components build_components(const ServiceConfig& cfg);

class PeaceService {
 public:
  using Clock = std::function<std::int64_t()>;  // epoch milliseconds

  PeaceService(ServiceConfig cfg, Components components, std::shared_ptr<HistoryStore> store,
               Clock clock = {});
  static std::unique_ptr<PeaceService> from_config(const ServiceConfig& cfg);

  /// Routes, applies CORS and converts every failure to an error body.
  Response handle(const Request& request);

  Response handle_score(const nlohmann::json& body);
  Response handle_classify(const nlohmann::json& body);
  Response handle_history(const std::map<std::string, std::string>& query);

  /// Transcripts that went through the emotion and LLM providers.
  std::size_t pipeline_runs() const { return pipeline_runs_.load(); }
  const ServiceConfig& config() const { return cfg_; }
  HistoryStore& history() { return *store_; }

 private:
  std::shared_ptr<const ScoreRecord> run_pipeline(const std::string& video_id,
                                                  const std::string& session_id,
                                                  const std::string& transcript,
                                                  const std::string& digest,
                                                  llm::ScoringMode mode);
  double classify_one(const nn::EmbeddingVector& v) const;
  void cors(const Request& req, Response& res) const;

  ServiceConfig cfg_;
  Components c_;
  std::shared_ptr<HistoryStore> store_;
  Clock clock_;
  util::RateLimiter limiter_;
  std::mutex inflight_mu_;
  std::map<std::pair<std::string, std::string>,
           std::shared_future<std::shared_ptr<const ScoreRecord>>>
      inflight_;
  std::atomic<std::size_t> pipeline_runs_{0};
};

/// httplib front end for a PeaceService.
class HttpServer {
 public:
  explicit HttpServer(PeaceService& service);
  ~HttpServer();

  /// Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace peacelens::service
