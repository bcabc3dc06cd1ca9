#include "leomap/backbone.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "leomap/util.hpp"

namespace leomap {

namespace {

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  return n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

}  // namespace

const char* to_string(BackboneRouter::Attribution a) {
  switch (a) {
    case BackboneRouter::Attribution::Ptr: return "ptr";
    case BackboneRouter::Attribution::LatencyCluster: return "latency-cluster";
    case BackboneRouter::Attribution::Unresolved: return "unresolved";
  }
  return "unresolved";
}

std::optional<Ipv6Addr> extract_backbone_router(const TracerouteResult& trace) {
  if (!trace.reached)
    fail(Errc::NotReached, "traceroute to " + trace.target.str() + " did not reach");
  if (trace.hops.size() < 3) return std::nullopt;
  return trace.hops[trace.hops.size() - 3].responder;
}

BackboneRouter attribute_router(const Ipv6Addr& addr, Prober& prober,
                                const ProbePolicy& policy) {
  BackboneRouter router;
  router.addr = addr;

  auto outcome = prober.resolve_ptr(addr, policy);
  if (!outcome.name) return router;

  auto parsed = parse_ptr(*outcome.name);
  switch (parsed.kind) {
    case PtrClassification::Kind::PopHost:
      router.pop = parsed.pop->code;
      router.attribution = BackboneRouter::Attribution::Ptr;
      break;
    case PtrClassification::Kind::Customer:
      // customers do not forward transit traffic; something is off
      router.anomaly = true;
      break;
    case PtrClassification::Kind::NotStarlink:
      break;
  }
  return router;
}

namespace {

double final_hop_median(const Ipv6Addr& target, Prober& prober, const ProbePolicy& policy,
                        int max_ttl) {
  auto trace = prober.traceroute(target, max_ttl, policy);
  if (!trace.reached)
    fail(Errc::Unreachable, target.str() + " unreachable by direct traceroute");
  return trace.hops.back().median_rtt();
}

}  // namespace

double measure_router_latency(const Ipv6Addr& a, const Ipv6Addr& b, Prober& prober,
                              const ProbePolicy& policy, int max_ttl) {
  if (a == b) return 0;
  double rtt_a = final_hop_median(a, prober, policy, max_ttl);
  double rtt_b = final_hop_median(b, prober, policy, max_ttl);
  return std::abs(rtt_b - rtt_a) / 2.0;
}

double naive_intermediate_delay(const TracerouteResult& trace, size_t hop_index) {
  if (hop_index >= trace.hops.size())
    fail(Errc::InvalidArgument, "hop index out of range");
  return trace.hops[hop_index].median_rtt() / 2.0;
}

ClusterReport cluster_unresolved(std::vector<BackboneRouter>& routers,
                                 const LatencyMatrix& latencies, double threshold_ms) {
  size_t n = routers.size();
  if (latencies.size() != n)
    fail(Errc::MatrixShapeMismatch,
         "matrix is " + std::to_string(latencies.size()) + "x" +
             std::to_string(latencies.size()) + " for " + std::to_string(n) + " routers");

  // Single linkage: union-find over pairs under the threshold.
  std::vector<size_t> root(n);
  std::iota(root.begin(), root.end(), size_t{0});
  std::function<size_t(size_t)> find = [&](size_t x) {
    while (root[x] != x) x = root[x] = root[root[x]];
    return x;
  };
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (latencies.at(i, j) < threshold_ms) root[find(i)] = find(j);

  std::map<size_t, std::vector<size_t>> groups;
  for (size_t i = 0; i < n; ++i) groups[find(i)].push_back(i);

  // Canonical component order: by smallest member address, so synthetic
  // labels do not depend on input permutation.
  std::vector<std::vector<size_t>> components;
  for (auto& [_, members] : groups) {
    std::sort(members.begin(), members.end(),
              [&](size_t a, size_t b) { return routers[a].addr < routers[b].addr; });
    components.push_back(std::move(members));
  }
  std::sort(components.begin(), components.end(), [&](const auto& a, const auto& b) {
    return routers[a.front()].addr < routers[b.front()].addr;
  });

  ClusterReport report;
  size_t next_synthetic = 1;
  for (auto& members : components) {
    ClusterReport::Component component;
    component.members = members;

    std::set<std::string> anchors;
    for (size_t i : members)
      if (routers[i].attribution == BackboneRouter::Attribution::Ptr)
        anchors.insert(*routers[i].pop);

    if (anchors.size() > 1) {
      component.ambiguous = true;
    } else {
      std::string pop = anchors.empty()
                            ? "unknown-" + std::to_string(next_synthetic++)
                            : *anchors.begin();
      component.pop = pop;
      for (size_t i : members) {
        if (routers[i].attribution == BackboneRouter::Attribution::Ptr) continue;
        routers[i].pop = pop;
        routers[i].attribution = BackboneRouter::Attribution::LatencyCluster;
      }
    }
    report.components.push_back(std::move(component));
  }
  return report;
}

BackboneGraph infer_edges(const std::vector<VantageTraces>& trace_sets,
                          const std::map<Ipv6Addr, std::string>& router_pops,
                          const EdgeOptions& options) {
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, uint64_t> evidence;
  std::map<std::pair<std::string, std::string>,
           std::set<std::tuple<std::string, Ipv6Addr, Ipv6Addr>>>
      contributors;

  for (const auto& set : trace_sets) {
    for (const auto& trace : set.traces) {
      for (size_t i = 0; i + 1 < trace.hops.size(); ++i) {
        const auto& a = trace.hops[i].responder;
        if (!a) continue;
        auto pop_a = router_pops.find(*a);
        if (pop_a == router_pops.end()) continue;
        nodes.insert(pop_a->second);

        const auto& b = trace.hops[i + 1].responder;
        if (!b) continue;
        auto pop_b = router_pops.find(*b);
        if (pop_b == router_pops.end()) continue;
        nodes.insert(pop_b->second);
        if (pop_a->second == pop_b->second) continue;

        auto key = std::minmax(pop_a->second, pop_b->second);
        evidence[{key.first, key.second}] += 1;
        contributors[{key.first, key.second}].insert({set.vantage, *a, *b});
      }
      // a lone mapped responder at the end of the hop list still marks its pop
      if (!trace.hops.empty() && trace.hops.back().responder) {
        auto pop = router_pops.find(*trace.hops.back().responder);
        if (pop != router_pops.end()) nodes.insert(pop->second);
      }
    }
  }

  BackboneGraph graph;
  for (const auto& pop : nodes) graph.nodes.push_back({pop, {}, {}, {}});

  for (const auto& [pair, count] : evidence) {
    if (count < static_cast<uint64_t>(options.min_evidence)) continue;
    BackboneGraphEdge edge;
    edge.a = pair.first;
    edge.b = pair.second;
    edge.evidence = count;
    if (options.latency) {
      std::vector<double> estimates;
      for (const auto& [vantage, ra, rb] : contributors.at(pair))
        if (auto estimate = options.latency(vantage, ra, rb)) estimates.push_back(*estimate);
      edge.one_way_delay_ms = median(std::move(estimates));
    }
    graph.edges.push_back(std::move(edge));
  }
  return graph;
}

SiteTable load_sites(std::istream& in) {
  SiteTable sites;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    auto fields = detail::split(text, ',');
    if (line_no == 1 && fields.size() >= 1 && fields[0] == "pop") continue;  // header
    if (fields.size() != 4)
      fail(Errc::InvalidArgument,
           "sites row " + std::to_string(line_no) + ": expected pop,label,lat,lon");
    try {
      sites[std::string(detail::trim(fields[0]))] = {std::string(detail::trim(fields[1])),
                                                     std::stod(fields[2]),
                                                     std::stod(fields[3])};
    } catch (const std::exception&) {
      fail(Errc::InvalidArgument, "sites row " + std::to_string(line_no) + ": bad coordinate");
    }
  }
  return sites;
}

SiteTable load_sites_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::InvalidArgument, "cannot open site table " + path);
  return load_sites(in);
}

double great_circle_km(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kEarthRadiusKm = 6371.0;
  constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
  double p1 = lat1 * kDegToRad, p2 = lat2 * kDegToRad;
  double dp = (lat2 - lat1) * kDegToRad, dl = (lon2 - lon1) * kDegToRad;
  double a = std::sin(dp / 2) * std::sin(dp / 2) +
             std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

nlohmann::ordered_json export_graph(const BackboneGraph& graph, const SiteTable& sites) {
  auto annotated = graph;
  std::sort(annotated.nodes.begin(), annotated.nodes.end(),
            [](const auto& a, const auto& b) { return a.pop < b.pop; });
  std::sort(annotated.edges.begin(), annotated.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.a, a.b) < std::tie(b.a, b.b);
  });

  nlohmann::ordered_json doc;
  doc["schema"] = "leomap-backbone-graph v1";

  auto nodes = nlohmann::ordered_json::array();
  for (auto& node : annotated.nodes) {
    if (auto it = sites.find(node.pop); it != sites.end()) {
      node.label = it->second.label;
      node.lat = it->second.lat;
      node.lon = it->second.lon;
    }
    nlohmann::ordered_json row{{"pop", node.pop}, {"label", node.label}};
    if (node.lat && node.lon) {
      row["lat"] = *node.lat;
      row["lon"] = *node.lon;
    }
    nodes.push_back(std::move(row));
  }
  doc["nodes"] = std::move(nodes);

  auto coords = [&](const std::string& pop) -> std::optional<std::pair<double, double>> {
    auto it = sites.find(pop);
    if (it == sites.end()) return std::nullopt;
    return std::make_pair(it->second.lat, it->second.lon);
  };

  auto edges = nlohmann::ordered_json::array();
  for (const auto& edge : annotated.edges) {
    nlohmann::ordered_json row{{"a", edge.a}, {"b", edge.b}};
    if (std::isnan(edge.one_way_delay_ms))
      row["one_way_delay_ms"] = nullptr;
    else
      row["one_way_delay_ms"] = edge.one_way_delay_ms;
    auto ca = coords(edge.a), cb = coords(edge.b);
    if (ca && cb)
      row["distance_km"] = great_circle_km(ca->first, ca->second, cb->first, cb->second);
    row["evidence"] = edge.evidence;
    edges.push_back(std::move(row));
  }
  doc["edges"] = std::move(edges);
  return doc;
}

MapResult map_backbone(const std::vector<Ipv6Addr>& targets,
                       const std::vector<std::pair<std::string, Prober*>>& vantages,
                       const ProbePolicy& policy, const MapOptions& options,
                       const std::set<std::string>& known_pops) {
  if (vantages.empty()) fail(Errc::InvalidArgument, "at least one vantage required");

  MapResult result;
  std::vector<VantageTraces> trace_sets;
  std::unordered_map<Ipv6Addr, std::vector<std::string>, Ipv6AddrHash> router_evidence;

  for (const auto& [name, prober] : vantages) {
    VantageTraces set;
    set.vantage = name;
    auto batch = run_batch(
        targets,
        [&, p = prober](const Ipv6Addr& t) { return p->traceroute(t, options.max_ttl, policy); },
        policy);
    for (auto& item : batch) {
      if (!item.ok()) {
        ++result.unreached_targets;
        continue;
      }
      auto trace = std::move(*item.value);
      if (!trace.reached) {
        ++result.unreached_targets;
        continue;
      }
      ++result.traces;
      if (auto router = extract_backbone_router(trace))
        router_evidence[*router].push_back(name + "->" + trace.target.str());
      else
        ++result.anonymous_extractions;
      set.traces.push_back(std::move(trace));
    }
    trace_sets.push_back(std::move(set));
  }

  // PTR attribution, from the first vantage (PTR answers are global).
  std::vector<Ipv6Addr> router_addrs;
  router_addrs.reserve(router_evidence.size());
  for (const auto& [addr, _] : router_evidence) router_addrs.push_back(addr);
  std::sort(router_addrs.begin(), router_addrs.end());

  Prober& resolver = *vantages.front().second;
  for (const auto& addr : router_addrs) {
    auto router = attribute_router(addr, resolver, policy);
    router.evidence = router_evidence[addr];
    std::sort(router.evidence.begin(), router.evidence.end());
    result.routers.push_back(std::move(router));
  }

  // Direct traceroutes per vantage feed both clustering and edge delays.
  std::map<std::pair<std::string, Ipv6Addr>, double> direct_rtt;
  for (const auto& [name, prober] : vantages) {
    auto batch = run_batch(
        router_addrs,
        [&, p = prober](const Ipv6Addr& t) { return p->traceroute(t, options.max_ttl, policy); },
        policy);
    for (const auto& item : batch) {
      if (!item.ok() || !item.value->reached) continue;
      direct_rtt[{name, item.target}] = item.value->hops.back().median_rtt();
    }
  }

  auto pair_latency = [&](const std::string& vantage, const Ipv6Addr& a,
                          const Ipv6Addr& b) -> std::optional<double> {
    auto ra = direct_rtt.find({vantage, a});
    auto rb = direct_rtt.find({vantage, b});
    if (ra == direct_rtt.end() || rb == direct_rtt.end()) return std::nullopt;
    return std::abs(rb->second - ra->second) / 2.0;
  };

  // Pairwise matrix: the largest per-vantage difference is the tightest
  // lower bound on the true router distance, so it merges the least.
  LatencyMatrix matrix(result.routers.size());
  for (size_t i = 0; i < result.routers.size(); ++i) {
    for (size_t j = i + 1; j < result.routers.size(); ++j) {
      double best = -1;
      for (const auto& [name, _] : vantages) {
        auto estimate = pair_latency(name, result.routers[i].addr, result.routers[j].addr);
        if (estimate && *estimate > best) best = *estimate;
      }
      if (best >= 0) matrix.set(i, j, best);
    }
  }
  cluster_unresolved(result.routers, matrix, options.cluster_threshold_ms);

  std::map<Ipv6Addr, std::string> router_pops;
  for (const auto& router : result.routers)
    if (router.pop) router_pops[router.addr] = *router.pop;

  EdgeOptions edge_options;
  edge_options.min_evidence = options.min_evidence;
  edge_options.latency = pair_latency;
  result.graph = infer_edges(trace_sets, router_pops, edge_options);

  std::set<std::string> covered;
  for (const auto& node : result.graph.nodes) covered.insert(node.pop);
  for (const auto& pop : known_pops)
    if (!covered.count(pop)) result.uncovered_pops.push_back(pop);
  return result;
}

}  // namespace leomap
