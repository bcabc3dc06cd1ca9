#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "leomap/probe.hpp"
#include "leomap/ptrmap.hpp"

namespace leomap {

/// A router surfaced by user traceroutes. `pop` may carry a synthetic
/// "unknown-N" label for clustered-but-unanchored routers, so it is a code
/// string rather than a PopId.
struct BackboneRouter {
  enum class Attribution { Ptr, LatencyCluster, Unresolved };

  Ipv6Addr addr;
  std::optional<std::string> pop;
  Attribution attribution = Attribution::Unresolved;
  std::vector<std::string> evidence;  // trace identifiers
  bool anomaly = false;               // e.g. customer PTR at a router position

  bool resolved() const { return pop.has_value(); }
};

const char* to_string(BackboneRouter::Attribution a);

/// Responder three positions from the end of a reached trace: target,
/// target gateway, backbone router. Nullopt when that hop was anonymous or
/// the trace is shorter than three hops. Throws Error(NotReached).
std::optional<Ipv6Addr> extract_backbone_router(const TracerouteResult& trace);

/// PTR-based attribution. PopHost names resolve the router; customer names
/// are flagged as anomalies; anything else leaves it unresolved.
BackboneRouter attribute_router(const Ipv6Addr& addr, Prober& prober,
                                const ProbePolicy& policy);

/// One-way latency estimate between two probe-reachable routers: half the
/// absolute difference of the median final-hop RTTs of direct traceroutes.
/// Final hops carry no tunnel inflation, unlike intermediate readings.
/// Throws Error(Unreachable) when either direct trace fails.
double measure_router_latency(const Ipv6Addr& a, const Ipv6Addr& b, Prober& prober,
                              const ProbePolicy& policy, int max_ttl = 32);

/// Cumulative one-way distance to a hop read naively from its intermediate
/// RTT. Inflated by half the tunnel overhead on MPLS paths; kept as the
/// contrast for the direct-traceroute estimator.
double naive_intermediate_delay(const TracerouteResult& trace, size_t hop_index);

/// Symmetric pairwise latency matrix; infinity marks unmeasured pairs.
class LatencyMatrix {
 public:
  explicit LatencyMatrix(size_t n)
      : n_(n), values_(n * n, std::numeric_limits<double>::infinity()) {
    for (size_t i = 0; i < n; ++i) set(i, i, 0);
  }

  size_t size() const { return n_; }
  double at(size_t i, size_t j) const { return values_[i * n_ + j]; }
  void set(size_t i, size_t j, double value) {
    values_[i * n_ + j] = value;
    values_[j * n_ + i] = value;
  }

 private:
  size_t n_;
  std::vector<double> values_;
};

struct ClusterReport {
  struct Component {
    std::vector<size_t> members;         // indices into the router list
    std::optional<std::string> pop;      // anchor pop or synthetic label
    bool ambiguous = false;              // conflicting PTR anchors
  };
  std::vector<Component> components;
};

/// Single-linkage clustering under `threshold_ms`. Unresolved members of a
/// component inherit its unique PTR anchor; components anchored to several
/// pops are flagged and left alone; unanchored components get "unknown-N"
/// labels numbered by their smallest member address.
/// Throws Error(MatrixShapeMismatch) when the matrix size disagrees.
ClusterReport cluster_unresolved(std::vector<BackboneRouter>& routers,
                                 const LatencyMatrix& latencies,
                                 double threshold_ms = 5.0);

struct VantageTraces {
  std::string vantage;
  std::vector<TracerouteResult> traces;
};

/// Latency estimate for a router pair as seen from a named vantage.
using PairLatencyFn = std::function<std::optional<double>(
    const std::string& vantage, const Ipv6Addr& a, const Ipv6Addr& b)>;

struct BackboneGraphNode {
  std::string pop;
  std::string label;
  std::optional<double> lat, lon;
};

struct BackboneGraphEdge {
  std::string a, b;  // a < b
  double one_way_delay_ms = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> distance_km;
  uint64_t evidence = 0;
};

struct BackboneGraph {
  std::vector<BackboneGraphNode> nodes;  // sorted by pop
  std::vector<BackboneGraphEdge> edges;  // sorted by (a, b)
};

struct EdgeOptions {
  int min_evidence = 2;
  PairLatencyFn latency;  // optional; edges keep NaN delay without it
};

/// PoP adjacency from consecutive mapped-router hops. Edge delay is the
/// median latency estimate over the distinct (vantage, router pair)
/// combinations that contributed evidence.
BackboneGraph infer_edges(const std::vector<VantageTraces>& trace_sets,
                          const std::map<Ipv6Addr, std::string>& router_pops,
                          const EdgeOptions& options = {});

struct SiteInfo {
  std::string label;
  double lat = 0, lon = 0;
};
using SiteTable = std::map<std::string, SiteInfo>;

/// CSV "pop,label,lat,lon"; a header row is tolerated.
SiteTable load_sites(std::istream& in);
SiteTable load_sites_file(const std::string& path);

double great_circle_km(double lat1, double lon1, double lat2, double lon2);

/// Stable JSON document with labeled nodes and distance-annotated edges.
nlohmann::ordered_json export_graph(const BackboneGraph& graph, const SiteTable& sites);

// ---------------------------------------------------------------------
// End-to-end mapping pipeline shared by the CLI and the bindings.

struct MapOptions {
  int min_evidence = 2;
  double cluster_threshold_ms = 5.0;
  int max_ttl = 32;
};

struct MapResult {
  std::vector<BackboneRouter> routers;   // sorted by address
  BackboneGraph graph;
  std::vector<std::string> uncovered_pops;  // known pops no vantage reached
  uint64_t traces = 0;
  uint64_t unreached_targets = 0;
  uint64_t anonymous_extractions = 0;    // reached traces hiding the router hop
};

/// Traceroutes every target from every vantage, extracts and attributes
/// backbone routers, clusters unresolved ones by direct-trace latency, and
/// assembles the PoP graph. `known_pops` feeds the coverage report.
MapResult map_backbone(const std::vector<Ipv6Addr>& targets,
                       const std::vector<std::pair<std::string, Prober*>>& vantages,
                       const ProbePolicy& policy, const MapOptions& options = {},
                       const std::set<std::string>& known_pops = {});

}  // namespace leomap
