#include "peacelens/embedding/gateway.hpp"

#include <fstream>
#include <random>
#include <set>
#include <thread>

#include "json.hpp"
#include "peacelens/util/bytes.hpp"
#include "peacelens/util/http.hpp"
#include "peacelens/util/log.hpp"
#include "peacelens/util/utf8.hpp"

namespace peacelens::embedding {

using nlohmann::json;

util::Sha256 content_hash(std::string_view model_id, std::string_view text) {
  std::string buf;
  util::put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(model_id.size()));
  buf.append(model_id);
  buf.append(text);
  return util::sha256(buf);
}

EmbeddingVector stub_embed(std::string_view text) {
  const auto digest = util::sha256(text);
  std::vector<std::uint32_t> words;
  for (std::size_t i = 0; i < digest.size(); i += 4)
    words.push_back(static_cast<std::uint32_t>(digest[i]) |
                    static_cast<std::uint32_t>(digest[i + 1]) << 8 |
                    static_cast<std::uint32_t>(digest[i + 2]) << 16 |
                    static_cast<std::uint32_t>(digest[i + 3]) << 24);
  std::seed_seq seq(words.begin(), words.end());
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> n01;
  Eigen::VectorXd v(nn::kEmbeddingDim);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = n01(rng);
  v /= v.norm();
  return EmbeddingVector(std::move(v));
}

std::vector<double> StubEmbeddingProvider::embed(const std::string&, const std::string& text) {
  const auto v = stub_embed(text);
  return {v.values().data(), v.values().data() + v.size()};
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.api_key.empty())
    throw MissingCredentials("live embedding mode needs PEACE_EMBED_API_KEY");
}

std::vector<double> HttpEmbeddingProvider::embed(const std::string& model_id,
                                                 const std::string& text) {
  const json body{{"model", model_id}, {"input", text}};
  util::HttpResult res;
  try {
    res = util::post_json(cfg_.endpoint, body.dump(),
                          {{"Authorization", "Bearer " + cfg_.api_key}}, cfg_.timeout);
  } catch (const util::TransportError& e) {
    throw ProviderError(e.what(), true);
  }
  if (res.status != 200)
    throw ProviderError("embedding endpoint returned HTTP " + std::to_string(res.status),
                        util::retryable_status(res.status));
  try {
    const json j = json::parse(res.body);
    return j.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("unreadable embedding response: ") + e.what(), false);
  }
}

namespace {
constexpr std::size_t kRecordBytes = 64 + nn::kEmbeddingDim * sizeof(double);

std::optional<util::Sha256> from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  util::Sha256 out{};
  for (std::size_t i = 0; i < 32; ++i) {
    int v = 0;
    for (int k = 0; k < 2; ++k) {
      const char c = hex[2 * i + static_cast<std::size_t>(k)];
      int d = c >= '0' && c <= '9' ? c - '0' : c >= 'a' && c <= 'f' ? c - 'a' + 10 : -1;
      if (d < 0) return std::nullopt;
      v = v * 16 + d;
    }
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}
}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!std::filesystem::exists(*path_)) return;
  const std::string bytes = util::read_file(*path_);
  util::ByteReader r(bytes);
  const auto now = std::chrono::system_clock::now();
  while (r.remaining() >= kRecordBytes) {
    const auto key = from_hex(r.take(64));
    if (!key) throw std::runtime_error("embedding cache " + path_->string() + " is corrupt");
    Eigen::VectorXd v(nn::kEmbeddingDim);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = r.get<double>();
    index_.insert_or_assign(*key, Entry{EmbeddingVector(std::move(v)), now});
  }
  ignored_tail_ = r.remaining();
  if (ignored_tail_ > 0) {
    util::log_warn("embedding cache has a partial trailing record; truncating it");
    std::filesystem::resize_file(*path_, bytes.size() - ignored_tail_);
  }
}

std::optional<EmbeddingVector> EmbeddingCache::find(const util::Sha256& key) const {
  std::lock_guard lock(mu_);
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second.vector;
}

void EmbeddingCache::insert(const util::Sha256& key, const EmbeddingVector& v) {
  std::lock_guard lock(mu_);
  if (index_.count(key)) return;
  if (path_) {
    std::string rec = util::to_hex(key);
    for (Eigen::Index i = 0; i < v.size(); ++i) util::put_le<double>(rec, v(i));
    std::ofstream out(*path_, std::ios::binary | std::ios::app);
    out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
    out.flush();
    if (!out) throw std::runtime_error("cannot append to embedding cache " + path_->string());
  }
  index_.emplace(key, Entry{v, std::chrono::system_clock::now()});
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return index_.size();
}

EmbeddingGateway::EmbeddingGateway(std::shared_ptr<EmbeddingProvider> provider,
                                   std::shared_ptr<EmbeddingCache> cache, RetryPolicy retry)
    : provider_(std::move(provider)), cache_(std::move(cache)), retry_(std::move(retry)) {
  if (!provider_) throw std::invalid_argument("embedding gateway needs a provider");
  if (!cache_) cache_ = std::make_shared<EmbeddingCache>();
  if (retry_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  if (!retry_.sleep) retry_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

EmbeddingVector EmbeddingGateway::fetch(const EmbeddingRequest& request) {
  std::string text = request.text;
  if (const auto limit = provider_->max_input_bytes(); limit > 0 && text.size() > limit) {
    text = std::string(util::utf8_prefix(text, limit));
    ++truncations_;
    util::log_warn("truncated '" + request.text_id + "' from " +
                   std::to_string(request.text.size()) + " to " + std::to_string(text.size()) +
                   " bytes for the embedding provider");
  }
  auto delay = retry_.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      auto values = provider_->embed(request.model_id, text);
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                            static_cast<Eigen::Index>(values.size()));
      return EmbeddingVector(std::move(v));
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= retry_.max_attempts)
        throw ProviderError("embedding failed after " + std::to_string(attempt) +
                                " attempt(s): " + e.what(),
                            e.retryable());
    }
    retry_.sleep(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(delay.count()) * retry_.multiplier));
  }
}

EmbeddingVector EmbeddingGateway::embed_text(const EmbeddingRequest& request) {
  if (request.text.empty()) throw std::invalid_argument("cannot embed empty text");
  const auto key = content_hash(request.model_id, request.text);
  if (auto hit = cache_->find(key)) return *hit;

  std::promise<EmbeddingVector> promise;
  std::shared_future<EmbeddingVector> shared;
  bool owner = false;
  {
    std::lock_guard lock(inflight_mu_);
    auto it = inflight_.find(key);
    if (it != inflight_.end()) {
      shared = it->second;
    } else {
      // Re-check under the lock: another caller may have finished meanwhile.
      if (auto hit = cache_->find(key)) return *hit;
      shared = promise.get_future().share();
      inflight_.emplace(key, shared);
      owner = true;
    }
  }
  if (!owner) return shared.get();

  try {
    auto v = fetch(request);
    cache_->insert(key, v);
    promise.set_value(v);
  } catch (...) {
    promise.set_exception(std::current_exception());
  }
  {
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key);
  }
  return shared.get();
}

BatchResult EmbeddingGateway::embed_batch(const std::vector<EmbeddingRequest>& requests,
                                          std::size_t max_in_flight) {
  if (max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  BatchResult result;
  std::set<std::string> ids;
  for (const auto& r : requests)
    if (!ids.insert(r.text_id).second)
      throw std::invalid_argument("duplicate text_id '" + r.text_id + "' in batch");

  // One representative request per content hash.
  std::map<util::Sha256, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (requests[i].text.empty()) {
      result.errors[requests[i].text_id] = "empty text";
      continue;
    }
    groups[content_hash(requests[i].model_id, requests[i].text)].push_back(i);
  }
  std::vector<const std::vector<std::size_t>*> work;
  for (const auto& [key, members] : groups) work.push_back(&members);

  std::mutex result_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t w; (w = next++) < work.size();) {
      const auto& members = *work[w];
      try {
        auto v = embed_text(requests[members.front()]);
        std::lock_guard lock(result_mu);
        for (auto i : members) result.vectors.insert_or_assign(requests[i].text_id, v);
      } catch (const std::exception& e) {
        std::lock_guard lock(result_mu);
        for (auto i : members) result.errors[requests[i].text_id] = e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(max_in_flight, work.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  if (n_threads > 0) worker();
  for (auto& t : pool) t.join();
  return result;
}

}  // namespace peacelens::embedding
