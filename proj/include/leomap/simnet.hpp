#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "leomap/geoip.hpp"
#include "leomap/probe.hpp"
#include "leomap/ptrmap.hpp"

namespace leomap {

/// Declarative topology description, usually loaded from a JSON document.
struct SimConfig {
  struct Pop {
    std::string code;
    std::string label;
    std::vector<Ipv6Addr> routers;
    std::optional<double> lat, lon;
  };
  struct Link {
    std::string a, b;
    double one_way_delay_ms = 0;
  };
  struct Gateway {
    Ipv6Addr addr;
    std::string pop;
  };
  struct User {
    Ipv6Addr addr;
    std::string pop;
    GeoIpEntry geo;
  };
  struct UserGroup {
    Ipv6Prefix prefix;
    uint64_t count = 0;
    std::string pop;
    std::string country, region_code, city;
  };
  struct Vantage {
    std::string name;
    std::string pop;
  };

  uint64_t seed = 0;

  // Latency model, all one-way milliseconds.
  double mpls_inflation_ms = 0;      // extra RTT on intermediate backbone hops
  double jitter_ms = 0;              // uniform +-j on every RTT sample
  double access_delay_ms = 20;       // dish -> its gateway
  double gateway_router_delay_ms = 0.5;
  double intra_pop_router_delay_ms = 1.0;
  double last_mile_delay_ms = 20;    // target gateway -> target router

  double loss_rate = 0;              // per echo attempt
  double anon_hop_rate = 0;          // intermediate hops answering anonymously
  bool gateway_ptr = false;

  std::vector<Pop> pops;
  std::vector<Link> links;
  std::vector<Gateway> gateways;
  std::vector<User> users;           // explicit users
  std::vector<UserGroup> user_groups;  // generated users
  std::vector<Vantage> vantages;
  std::vector<Ipv6Addr> silent_users;
  std::vector<Ipv6Addr> suppressed_ptrs;

  static SimConfig from_json(const nlohmann::json& doc);
  static SimConfig from_file(const std::string& path);
  nlohmann::ordered_json to_json() const;
};

/// Fully materialized network. Immutable after build; all answers are pure
/// functions of (topology, query), with per-query RNG streams keyed by the
/// query itself so concurrency cannot reorder randomness.
class SimTopology {
 public:
  struct UserInfo {
    Ipv6Addr addr;
    std::string pop;
    GeoIpEntry geo;
    Ipv6Addr gateway;
    bool silent = false;
  };

  /// Validates and materializes the config. Throws Error(InvalidTopology)
  /// naming the first violated constraint.
  static std::shared_ptr<const SimTopology> build(const SimConfig& config);

  // --- probe answering ------------------------------------------------
  EchoStatus answer_echo(const Ipv6Addr& addr, int attempts) const;
  PtrOutcome answer_ptr(const Ipv6Addr& addr) const;
  /// Synthesized hop sequence from a named vantage toward `target`.
  /// Throws Error(UnknownTarget) for addresses outside the topology and
  /// Error(InvalidArgument) for unknown vantages or bad max_ttl.
  TracerouteResult answer_traceroute(const std::string& vantage, const Ipv6Addr& target,
                                     int max_ttl, int samples_per_hop) const;

  // --- ground truth ---------------------------------------------------
  nlohmann::ordered_json ground_truth() const;
  /// Feed rows covering every user allocation (one row per distinct prefix).
  std::vector<GeoIpEntry> geoip_entries() const;
  /// Site rows "pop,label,lat,lon" for pops carrying coordinates.
  std::string sites_csv() const;

  const std::vector<UserInfo>& users() const { return users_; }
  const SimConfig& config() const { return config_; }
  std::vector<std::string> pop_codes() const;
  std::vector<std::string> vantage_names() const;
  std::optional<std::string> router_pop(const Ipv6Addr& addr) const;
  /// One-way delay of the shortest path between two pops.
  double pop_distance_ms(const std::string& from, const std::string& to) const;

 private:
  friend class SimProber;
  SimTopology() = default;

  struct PopData {
    std::string code;
    std::string label;
    std::vector<Ipv6Addr> routers;
    std::vector<Ipv6Addr> gateways;
    std::optional<double> lat, lon;
  };

  struct RouterRef {
    size_t pop;
    size_t index;  // position in the pop's router chain
  };

  size_t pop_index(const std::string& code) const;
  std::vector<size_t> route(size_t from_pop, size_t to_pop) const;
  double rng_jitter(const char* stream, const Ipv6Addr& target, int ttl,
                    int sample) const;
  bool rng_event(const char* stream, const Ipv6Addr& addr, int salt,
                 double probability) const;
  std::vector<double> hop_rtts(const Ipv6Addr& trace_target, int ttl, double one_way_ms,
                               double inflation_ms, int samples) const;

  SimConfig config_;
  std::vector<PopData> pops_;
  std::map<std::string, size_t> pop_by_code_;
  std::vector<UserInfo> users_;
  std::unordered_map<Ipv6Addr, size_t, Ipv6AddrHash> user_by_addr_;
  std::unordered_map<Ipv6Addr, RouterRef, Ipv6AddrHash> router_by_addr_;
  std::unordered_map<Ipv6Addr, size_t, Ipv6AddrHash> gateway_pop_;
  std::unordered_map<Ipv6Addr, std::string, Ipv6AddrHash> ptr_zone_;
  std::unordered_set<Ipv6Addr, Ipv6AddrHash> suppressed_;
  std::map<std::string, Ipv6Addr> vantage_gateway_;
  std::map<std::string, size_t> vantage_pop_;

  // links_[a] = {(b, delay)}; parent_/dist_ hold one shortest-path tree per
  // source pop, ties broken toward the lexicographically smaller pop code.
  std::vector<std::vector<std::pair<size_t, double>>> links_;
  std::vector<std::vector<int>> parent_;
  std::vector<std::vector<double>> dist_;
};

/// Prober adapter over a simulated topology. Echo and PTR answers do not
/// depend on the vantage; traceroutes require one.
class SimProber : public Prober {
 public:
  explicit SimProber(std::shared_ptr<const SimTopology> topology,
                     std::string vantage = {})
      : topology_(std::move(topology)), vantage_(std::move(vantage)) {}

  EchoStatus echo(const Ipv6Addr& target, const ProbePolicy& policy) override;
  TracerouteResult traceroute(const Ipv6Addr& target, int max_ttl,
                              const ProbePolicy& policy) override;
  PtrOutcome resolve_ptr(const Ipv6Addr& addr, const ProbePolicy& policy) override;

  const std::string& vantage() const { return vantage_; }

 private:
  std::shared_ptr<const SimTopology> topology_;
  std::string vantage_;
};

}  // namespace leomap
