#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace peacelens::util {

struct HttpResult {
  int status = 0;
  std::string body;
};

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// POSTs a JSON body to an absolute http(s) URL. Every outbound request made
/// by provider clients goes through here. Throws TransportError when no HTTP
/// response was received.
HttpResult post_json(const std::string& url, const std::string& body,
                     const std::map<std::string, std::string>& headers,
                     std::chrono::seconds timeout = std::chrono::seconds(60));

/// Number of outbound requests attempted by this process.
std::uint64_t outbound_request_count();

/// Transient statuses worth retrying.
inline bool retryable_status(int status) {
  return status == 408 || status == 425 || status == 429 || status >= 500;
}

}  // namespace peacelens::util
