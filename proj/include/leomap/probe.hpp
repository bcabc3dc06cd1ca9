#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "leomap/addressing.hpp"
#include "leomap/errors.hpp"
#include "leomap/util.hpp"

namespace leomap {

struct ProbePolicy {
  int max_in_flight = 256;
  int rate_per_second = 1000;
  int timeout_ms = 2000;
  int retries = 2;        // extra probes per hop/echo beyond the first
  int echo_attempts = 3;
  bool randomize_order = false;
  uint64_t seed = 0;

  void validate() const {
    if (max_in_flight < 1 || rate_per_second < 1 || timeout_ms < 1 ||
        retries < 0 || echo_attempts < 1)
      fail(Errc::InvalidArgument, "probe policy fields out of range");
  }
};

struct HopObservation {
  int ttl = 0;
  std::optional<Ipv6Addr> responder;
  std::vector<double> rtt_samples;  // milliseconds

  /// Median of the samples; NaN when empty.
  double median_rtt() const {
    if (rtt_samples.empty()) return std::nan("");
    auto sorted = rtt_samples;
    std::sort(sorted.begin(), sorted.end());
    size_t n = sorted.size();
    return n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
  }
};

struct TracerouteResult {
  Ipv6Addr target;
  std::vector<HopObservation> hops;
  bool reached = false;

  /// Enforced on every adapter result: TTLs strictly increasing from 1,
  /// silent hops carry no samples, reached implies the target answered last.
  void validate() const {
    int expect = 1;
    for (const auto& hop : hops) {
      if (hop.ttl != expect++)
        fail(Errc::InvalidArgument, "hop TTLs must increase from 1");
      if (!hop.responder && !hop.rtt_samples.empty())
        fail(Errc::InvalidArgument, "silent hop with RTT samples");
      for (double rtt : hop.rtt_samples)
        if (!(rtt >= 0) || !std::isfinite(rtt))
          fail(Errc::InvalidArgument, "RTT samples must be finite and non-negative");
    }
    if (reached &&
        (hops.empty() || !hops.back().responder || *hops.back().responder != target))
      fail(Errc::InvalidArgument, "reached trace must end at the target");
  }
};

enum class EchoStatus { Alive, Silent };

struct PtrOutcome {
  enum class Reason { Found, NoRecord, Timeout };
  std::optional<std::string> name;
  Reason reason = Reason::NoRecord;
};

/// Measurement adapter: one instance is one vantage. Implementations must
/// be safe for concurrent calls.
class Prober {
 public:
  virtual ~Prober() = default;

  virtual EchoStatus echo(const Ipv6Addr& target, const ProbePolicy& policy) = 0;
  virtual TracerouteResult traceroute(const Ipv6Addr& target, int max_ttl,
                                      const ProbePolicy& policy) = 0;
  virtual PtrOutcome resolve_ptr(const Ipv6Addr& addr, const ProbePolicy& policy) = 0;
};

/// Prefixes that must never be probed.
struct Blocklist {
  std::vector<Ipv6Prefix> prefixes;

  bool contains(const Ipv6Addr& addr) const {
    for (const auto& p : prefixes)
      if (p.contains(addr)) return true;
    return false;
  }

  static Blocklist load_file(const std::string& path);
};

class TokenBucket {
 public:
  TokenBucket(double rate_per_second, double capacity)
      : rate_(rate_per_second),
        capacity_(capacity),
        tokens_(capacity),
        last_(std::chrono::steady_clock::now()) {}

  /// Blocks until a token is available.
  void acquire() {
    std::unique_lock lock(mu_);
    refill();
    while (tokens_ < 1.0) {
      double deficit = 1.0 - tokens_;
      auto wait = std::chrono::duration<double>(deficit / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
      refill();
    }
    tokens_ -= 1.0;
  }

 private:
  void refill() {
    auto now = std::chrono::steady_clock::now();
    double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
  }

  double rate_;
  double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  std::mutex mu_;
};

template <typename R>
struct BatchItem {
  Ipv6Addr target;
  std::optional<R> value;
  std::string error;  // non-empty when the probe failed or was blocked

  bool ok() const { return value.has_value(); }
};

/// Dispatches `op` over every target with bounded parallelism and a token
/// bucket capped so that any one-second window sees at most
/// rate_per_second + max_in_flight dispatches. Results keep target order;
/// per-target failures are captured, never propagated.
template <typename Op>
auto run_batch(const std::vector<Ipv6Addr>& targets, Op&& op, const ProbePolicy& policy,
               const Blocklist* blocklist = nullptr)
    -> std::vector<BatchItem<std::decay_t<std::invoke_result_t<Op&, const Ipv6Addr&>>>> {
  using R = std::decay_t<std::invoke_result_t<Op&, const Ipv6Addr&>>;
  policy.validate();

  std::vector<BatchItem<R>> results(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) results[i].target = targets[i];
  if (targets.empty()) return results;

  std::vector<size_t> order(targets.size());
  std::iota(order.begin(), order.end(), size_t{0});
  if (policy.randomize_order) {
    detail::Rng rng(detail::mix(policy.seed, 0x6f72646572));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);
  }

  double rate = static_cast<double>(policy.rate_per_second);
  TokenBucket bucket(rate, std::min(rate, static_cast<double>(policy.max_in_flight)));

  size_t n_threads = std::min({static_cast<size_t>(policy.max_in_flight), targets.size(),
                               size_t{64}});
  std::atomic<size_t> cursor{0};

  auto worker = [&] {
    while (true) {
      size_t slot = cursor.fetch_add(1);
      if (slot >= order.size()) return;
      size_t idx = order[slot];
      auto& item = results[idx];
      if (blocklist && blocklist->contains(item.target)) {
        item.error = "blocklisted";
        continue;
      }
      bucket.acquire();
      try {
        item.value = op(item.target);
      } catch (const Error& e) {
        item.error = std::string(errc_name(e.code())) + ": " + e.what();
      } catch (const std::exception& e) {
        item.error = e.what();
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

/// Live adapter backed by ICMPv6 raw sockets and the system resolver.
/// Construction throws Error(AdapterUnavailable) without raw-socket
/// privileges, so privilege problems surface once, at startup.
class LiveProber : public Prober {
 public:
  LiveProber();
  ~LiveProber() override;

  EchoStatus echo(const Ipv6Addr& target, const ProbePolicy& policy) override;
  TracerouteResult traceroute(const Ipv6Addr& target, int max_ttl,
                              const ProbePolicy& policy) override;
  PtrOutcome resolve_ptr(const Ipv6Addr& addr, const ProbePolicy& policy) override;

 private:
  struct ProbeReply {
    std::optional<Ipv6Addr> responder;
    double rtt_ms = 0;
    bool is_echo_reply = false;
  };

  std::optional<ProbeReply> probe_once(const Ipv6Addr& target, int hop_limit,
                                       int timeout_ms);

  int send_fd_ = -1;
  std::mutex mu_;
  uint16_t ident_ = 0;
  std::atomic<uint16_t> sequence_{0};
};

}  // namespace leomap
