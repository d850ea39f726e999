#pragma once

#include <chrono>
#include <algorithm>
#include <mutex>
#include <thread>

namespace peacelens::util {

/// Token bucket refilled continuously at `per_minute` tokens per minute, with
/// a burst capacity of the same size. A limit of 0 disables limiting.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double per_minute = 0.0)
      : rate_per_sec_(per_minute / 60.0), capacity_(per_minute), tokens_(per_minute),
        last_(Clock::now()) {}

  bool try_acquire() {
    if (capacity_ <= 0.0) return true;
    std::lock_guard lock(mu_);
    refill();
    if (tokens_ < 1.0) return false;
    tokens_ -= 1.0;
    return true;
  }

  /// Blocks until a token is available.
  void acquire() {
    if (capacity_ <= 0.0) return;
    for (;;) {
      std::chrono::duration<double> wait{};
      {
        std::lock_guard lock(mu_);
        refill();
        if (tokens_ >= 1.0) {
          tokens_ -= 1.0;
          return;
        }
        wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_sec_);
      }
      std::this_thread::sleep_for(wait);
    }
  }

 private:
  void refill() {
    const auto now = Clock::now();
    const double dt = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + dt * rate_per_sec_);
  }

  std::mutex mu_;
  double rate_per_sec_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
};

}  // namespace peacelens::util
