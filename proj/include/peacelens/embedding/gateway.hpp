#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "peacelens/nn/embedding_vector.hpp"
#include "peacelens/util/digest.hpp"

namespace peacelens::embedding {

using nn::DimensionMismatch;
using nn::EmbeddingVector;

inline constexpr std::string_view kDefaultModel = "text-embedding-3-small";

struct EmbeddingRequest {
  std::string text_id;
  std::string text;
  std::string model_id{kDefaultModel};
};

/// SHA-256 over (u32 LE length of model_id, model_id, text).
util::Sha256 content_hash(std::string_view model_id, std::string_view text);

/// Unit-norm Gaussian direction seeded from SHA-256(text).
EmbeddingVector stub_embed(std::string_view text);

class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& what, bool retryable)
      : std::runtime_error(what), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

class MissingCredentials : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  /// Raw provider output; the gateway validates the dimension.
  virtual std::vector<double> embed(const std::string& model_id, const std::string& text) = 0;
  /// Longest input in bytes the provider accepts, or 0 for no limit.
  virtual std::size_t max_input_bytes() const { return 0; }
};

class StubEmbeddingProvider : public EmbeddingProvider {
 public:
  std::vector<double> embed(const std::string& model_id, const std::string& text) override;
};

struct HttpEmbeddingConfig {
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string api_key;  // PEACE_EMBED_API_KEY
  std::chrono::seconds timeout{60};
  // 8191 tokens at a conservative three bytes per token.
  std::size_t max_input_bytes = 24000;
};

/// OpenAI-compatible embeddings endpoint.
class HttpEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(HttpEmbeddingConfig cfg);
  std::vector<double> embed(const std::string& model_id, const std::string& text) override;
  std::size_t max_input_bytes() const override { return cfg_.max_input_bytes; }

 private:
  HttpEmbeddingConfig cfg_;
};

/// Append-only on-disk cache. Each record is the 64-char hex digest followed by
/// 1536 little-endian float64 values. A partial record at the end of the file
/// (interrupted append) is ignored on load.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path path);

  std::optional<EmbeddingVector> find(const util::Sha256& key) const;
  void insert(const util::Sha256& key, const EmbeddingVector& v);
  std::size_t size() const;
  std::size_t ignored_tail_bytes() const { return ignored_tail_; }

 private:
  struct Entry {
    EmbeddingVector vector;
    std::chrono::system_clock::time_point created_at;
  };
  mutable std::mutex mu_;
  std::map<util::Sha256, Entry> index_;
  std::optional<std::filesystem::path> path_;
  std::size_t ignored_tail_ = 0;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  /// Replaceable so tests can observe backoff without sleeping.
  std::function<void(std::chrono::milliseconds)> sleep;
};

struct BatchResult {
  std::map<std::string, EmbeddingVector> vectors;
  std::map<std::string, std::string> errors;
};

class EmbeddingGateway {
 public:
  EmbeddingGateway(std::shared_ptr<EmbeddingProvider> provider,
                   std::shared_ptr<EmbeddingCache> cache, RetryPolicy retry = {});

  /// Cache hit, or one provider call (with retries) whose result is cached
  /// before returning. Concurrent calls for the same content share one call.
  EmbeddingVector embed_text(const EmbeddingRequest& request);

  /// Deduplicates by content hash and runs at most `max_in_flight` provider
  /// calls at once. Failures are reported per text_id.
  BatchResult embed_batch(const std::vector<EmbeddingRequest>& requests,
                          std::size_t max_in_flight = 4);

  std::size_t truncations() const { return truncations_.load(); }

 private:
  EmbeddingVector fetch(const EmbeddingRequest& request);

  std::shared_ptr<EmbeddingProvider> provider_;
  std::shared_ptr<EmbeddingCache> cache_;
  RetryPolicy retry_;
  std::mutex inflight_mu_;
  std::map<util::Sha256, std::shared_future<EmbeddingVector>> inflight_;
  std::atomic<std::size_t> truncations_{0};
};

}  // namespace peacelens::embedding
