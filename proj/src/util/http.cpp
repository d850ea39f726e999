#include "httplib.h"

#include "peacelens/util/http.hpp"

#include <atomic>

namespace peacelens::util {

namespace {

std::atomic<std::uint64_t> g_outbound{0};

struct SplitUrl {
  std::string origin;
  std::string path;
};

SplitUrl split(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) throw TransportError("URL lacks a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::map<std::string, std::string>& headers,
                     std::chrono::seconds timeout) {
  ++g_outbound;
  const auto parts = split(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(parts.path, h, body, "application/json");
  if (!res) throw TransportError("request to " + parts.origin + " failed: " +
                                 httplib::to_string(res.error()));
  return {res->status, res->body};
}

std::uint64_t outbound_request_count() { return g_outbound.load(); }

}  // namespace peacelens::util
