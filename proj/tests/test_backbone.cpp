#include <doctest.h>

#include <numeric>

#include "helpers.hpp"
#include "leomap/backbone.hpp"
#include "leomap/simnet.hpp"
#include "sim_fixtures.hpp"

using namespace leomap;

namespace {

ProbePolicy sim_policy() {
  ProbePolicy policy;
  policy.rate_per_second = 1000000000;
  policy.max_in_flight = 32;
  return policy;
}

Ipv6Addr a(const char* text) { return Ipv6Addr::must_parse(text); }

TracerouteResult make_trace(const std::vector<std::optional<Ipv6Addr>>& responders,
                            bool reached) {
  TracerouteResult trace;
  trace.hops.reserve(responders.size());
  for (size_t i = 0; i < responders.size(); ++i) {
    HopObservation hop;
    hop.ttl = static_cast<int>(i + 1);
    hop.responder = responders[i];
    if (hop.responder) hop.rtt_samples = {10.0 + static_cast<double>(i)};
    trace.hops.push_back(std::move(hop));
  }
  if (!responders.empty() && responders.back()) trace.target = *responders.back();
  trace.reached = reached;
  return trace;
}

// Brute-force single-linkage oracle: transitive closure over the
// under-threshold relation, by repeated sweeps until a fixpoint.
std::vector<int> closure_oracle(const LatencyMatrix& m, double threshold) {
  size_t n = m.size();
  std::vector<int> group(n);
  std::iota(group.begin(), group.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (m.at(i, j) < threshold && group[i] != group[j]) {
          int merged = std::min(group[i], group[j]);
          int gone_a = group[i], gone_b = group[j];
          for (size_t k = 0; k < n; ++k)
            if (group[k] == gone_a || group[k] == gone_b) group[k] = merged;
          changed = true;
        }
  }
  return group;
}

}  // namespace

TEST_CASE("the third-to-last responder is the backbone router") {
  auto gw = a("2620:134:b0fe:250::1");
  auto r1 = a("2620:134:b0ff::11");
  auto r2 = a("2620:134:b0ff::12");
  auto tgt_gw = a("2620:134:b0fe:250::2");
  auto target = a("2605:59c8::1");

  auto five = make_trace({gw, r1, r2, tgt_gw, target}, true);
  CHECK_EQ(extract_backbone_router(five), r2);

  auto four = make_trace({gw, r1, tgt_gw, target}, true);
  CHECK_EQ(extract_backbone_router(four), r1);

  auto anonymous = make_trace({gw, r1, std::nullopt, tgt_gw, target}, true);
  CHECK_FALSE(extract_backbone_router(anonymous).has_value());

  auto hidden = make_trace({gw, std::nullopt, tgt_gw, target}, true);
  CHECK_FALSE(extract_backbone_router(hidden).has_value());

  auto unreached = make_trace({gw, r1}, false);
  try {
    extract_backbone_router(unreached);
    FAIL("expected NotReached");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::NotReached);
  }

  auto tiny = make_trace({target}, true);
  CHECK_FALSE(extract_backbone_router(tiny).has_value());
}

TEST_CASE("ptr attribution resolves pop hosts and flags customer anomalies") {
  struct ZoneProber : Prober {
    std::optional<std::string> answer;
    EchoStatus echo(const Ipv6Addr&, const ProbePolicy&) override { return EchoStatus::Alive; }
    TracerouteResult traceroute(const Ipv6Addr& t, int, const ProbePolicy&) override {
      return {t, {}, false};
    }
    PtrOutcome resolve_ptr(const Ipv6Addr&, const ProbePolicy&) override {
      if (!answer) return {std::nullopt, PtrOutcome::Reason::NoRecord};
      return {answer, PtrOutcome::Reason::Found};
    }
  } prober;

  auto addr = a("2620:134:b0ff::1");

  prober.answer = "edge1.sttlwax1.pop.starlinkisp.net";
  auto resolved = attribute_router(addr, prober, sim_policy());
  CHECK_EQ(resolved.attribution, BackboneRouter::Attribution::Ptr);
  CHECK_EQ(resolved.pop, "sttlwax1");

  prober.answer.reset();
  auto unresolved = attribute_router(addr, prober, sim_policy());
  CHECK_EQ(unresolved.attribution, BackboneRouter::Attribution::Unresolved);
  CHECK_FALSE(unresolved.pop.has_value());

  prober.answer = "customer.sttlwax1.pop.starlinkisp.net";
  auto weird = attribute_router(addr, prober, sim_policy());
  CHECK_EQ(weird.attribution, BackboneRouter::Attribution::Unresolved);
  CHECK(weird.anomaly);
  CHECK_FALSE(weird.pop.has_value());

  prober.answer = "ns1.example.net";
  auto foreign = attribute_router(addr, prober, sim_policy());
  CHECK_EQ(foreign.attribution, BackboneRouter::Attribution::Unresolved);
}

TEST_CASE("direct-trace differencing cancels tunnel inflation") {
  auto config = testutil::line4_config();
  config.mpls_inflation_ms = 30;
  auto topo = SimTopology::build(config);
  SimProber prober(topo, "v-sea");

  // same pop, one intra-pop hop apart
  double same_pop = measure_router_latency(testutil::router_addr(2, 0),
                                           testutil::router_addr(2, 1), prober,
                                           sim_policy());
  CHECK_EQ(same_pop, doctest::Approx(1.0).epsilon(0.5));

  // adjacent pops: dnvrcox1 -> chcoilx1 link is 17 ms
  double adjacent = measure_router_latency(testutil::router_addr(1, 0),
                                           testutil::router_addr(2, 0), prober,
                                           sim_policy());
  CHECK_EQ(adjacent, doctest::Approx(17.0).epsilon(0.06));

  CHECK_EQ(measure_router_latency(testutil::router_addr(1, 0), testutil::router_addr(1, 0),
                                  prober, sim_policy()),
           0);

  // the naive intermediate reading misses by half the inflation
  Ipv6Addr far_user;
  for (const auto& user : topo->users())
    if (user.pop == "nwyynyx1") far_user = user.addr;
  auto trace = prober.traceroute(far_user, 32, sim_policy());
  REQUIRE(trace.reached);
  double true_delay_r2 = 15 + 0.5 + 20 + 17;  // cumulative to the chcoilx1 router
  CHECK_EQ(naive_intermediate_delay(trace, 3) - true_delay_r2, doctest::Approx(15.0));

  try {
    measure_router_latency(a("2a0d::1"), testutil::router_addr(1, 0), prober, sim_policy());
    FAIL("expected Unreachable");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::Unreachable);
  }
}

TEST_CASE("clustering inherits anchors, flags conflicts, labels orphans") {
  auto make_router = [&](const char* addr, std::optional<std::string> pop) {
    BackboneRouter router;
    router.addr = a(addr);
    if (pop) {
      router.pop = pop;
      router.attribution = BackboneRouter::Attribution::Ptr;
    }
    return router;
  };

  SUBCASE("unresolved router near an anchor joins its pop") {
    std::vector<BackboneRouter> routers = {
        make_router("2620:134:b0ff::1", "sttlwax1"),
        make_router("2620:134:b0ff::2", std::nullopt),
    };
    LatencyMatrix m(2);
    m.set(0, 1, 2.0);
    auto report = cluster_unresolved(routers, m);
    CHECK_EQ(routers[1].pop, "sttlwax1");
    CHECK_EQ(routers[1].attribution, BackboneRouter::Attribution::LatencyCluster);
    CHECK_EQ(report.components.size(), 1);
  }

  SUBCASE("an isolated router gets a synthetic label") {
    std::vector<BackboneRouter> routers = {
        make_router("2620:134:b0ff::1", "sttlwax1"),
        make_router("2620:134:b0ff::2", std::nullopt),
    };
    LatencyMatrix m(2);
    m.set(0, 1, 50.0);
    cluster_unresolved(routers, m);
    CHECK_EQ(routers[1].pop, "unknown-1");
    CHECK_EQ(routers[1].attribution, BackboneRouter::Attribution::LatencyCluster);
  }

  SUBCASE("conflicting anchors leave members untouched and flagged") {
    std::vector<BackboneRouter> routers = {
        make_router("2620:134:b0ff::1", "sttlwax1"),
        make_router("2620:134:b0ff::2", std::nullopt),
        make_router("2620:134:b0ff::3", "chcoilx1"),
    };
    LatencyMatrix m(3);
    m.set(0, 1, 2.0);
    m.set(1, 2, 3.0);
    m.set(0, 2, 4.0);
    auto report = cluster_unresolved(routers, m);
    CHECK_FALSE(routers[1].pop.has_value());
    CHECK_EQ(routers[1].attribution, BackboneRouter::Attribution::Unresolved);
    REQUIRE_EQ(report.components.size(), 1);
    CHECK(report.components[0].ambiguous);
    // the anchored routers keep their ptr pops
    CHECK_EQ(routers[0].pop, "sttlwax1");
    CHECK_EQ(routers[2].pop, "chcoilx1");
  }

  SUBCASE("matrix shape must match") {
    std::vector<BackboneRouter> routers = {make_router("2620:134:b0ff::1", std::nullopt)};
    LatencyMatrix m(2);
    try {
      cluster_unresolved(routers, m);
      FAIL("expected MatrixShapeMismatch");
    } catch (const Error& e) {
      CHECK_EQ(e.code(), Errc::MatrixShapeMismatch);
    }
  }
}

TEST_CASE("clustering equals the transitive-closure oracle and ignores order") {
  testutil::XorShift rng(55);
  for (int round = 0; round < 12; ++round) {
    size_t n = 5 + rng.below(196);
    LatencyMatrix m(n);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = i + 1; j < n; ++j)
        m.set(i, j, static_cast<double>(rng.below(120)) / 10.0);  // 0..12ms

    std::vector<BackboneRouter> routers;
    for (size_t i = 0; i < n; ++i) {
      BackboneRouter router;
      router.addr = Ipv6Addr{0x2620013400000000ull, i + 1};
      if (rng.below(10) < 2) {
        router.pop = "pops" + std::to_string(rng.below(4) + 1);
        router.attribution = BackboneRouter::Attribution::Ptr;
      }
      routers.push_back(std::move(router));
    }

    auto oracle_groups = closure_oracle(m, 5.0);
    auto clustered = routers;
    auto report = cluster_unresolved(clustered, m, 5.0);

    // components must partition identically to the closure oracle
    std::map<int, std::set<size_t>> expected;
    for (size_t i = 0; i < n; ++i) expected[oracle_groups[i]].insert(i);
    std::set<std::set<size_t>> expected_sets, actual_sets;
    for (const auto& [_, members] : expected) expected_sets.insert(members);
    for (const auto& component : report.components)
      actual_sets.insert(std::set<size_t>(component.members.begin(),
                                          component.members.end()));
    CHECK_EQ(actual_sets, expected_sets);

    // permutation invariance: addr -> pop survives any consistent shuffle
    std::map<std::string, std::optional<std::string>> baseline;
    for (const auto& router : clustered) baseline[router.addr.str()] = router.pop;

    for (int shuffle = 0; shuffle < 3; ++shuffle) {
      std::vector<size_t> perm(n);
      std::iota(perm.begin(), perm.end(), size_t{0});
      for (size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

      std::vector<BackboneRouter> shuffled(n);
      LatencyMatrix pm(n);
      for (size_t i = 0; i < n; ++i) {
        shuffled[i] = routers[perm[i]];
        for (size_t j = 0; j < n; ++j) pm.set(i, j, m.at(perm[i], perm[j]));
      }
      cluster_unresolved(shuffled, pm, 5.0);
      for (const auto& router : shuffled)
        CHECK_EQ(router.pop, baseline.at(router.addr.str()));
    }
  }
}

TEST_CASE("edges need consecutive mapped responders and enough evidence") {
  auto r_a1 = a("2620:134:b0ff::1");
  auto r_a2 = a("2620:134:b0ff::2");
  auto r_b = a("2620:134:b0ff::11");
  auto r_c = a("2620:134:b0ff::21");
  std::map<Ipv6Addr, std::string> pops = {
      {r_a1, "aaaa1"}, {r_a2, "aaaa1"}, {r_b, "bbbb1"}, {r_c, "cccc1"}};

  auto user = a("2605:59c8::1");
  auto gw = a("2620:134:b0fe:250::1");

  SUBCASE("single-pop traces give a node and no edges") {
    std::vector<VantageTraces> sets = {
        {"v", {make_trace({gw, r_a1, gw, user}, false),
               make_trace({gw, r_a2, gw, user}, false)}}};
    auto graph = infer_edges(sets, pops, {});
    REQUIRE_EQ(graph.nodes.size(), 1);
    CHECK_EQ(graph.nodes[0].pop, "aaaa1");
    CHECK(graph.edges.empty());
  }

  SUBCASE("anonymous gaps break adjacency") {
    std::vector<VantageTraces> sets = {
        {"v",
         {make_trace({gw, r_a1, std::nullopt, r_b, gw, user}, false),
          make_trace({gw, r_a1, std::nullopt, r_b, gw, user}, false)}}};
    auto graph = infer_edges(sets, pops, {});
    CHECK_EQ(graph.nodes.size(), 2);
    CHECK(graph.edges.empty());
  }

  SUBCASE("same-pop consecutive hops never form an edge") {
    std::vector<VantageTraces> sets = {
        {"v", {make_trace({gw, r_a1, r_a2, gw, user}, false),
               make_trace({gw, r_a1, r_a2, gw, user}, false)}}};
    auto graph = infer_edges(sets, pops, {});
    CHECK(graph.edges.empty());
  }

  SUBCASE("evidence below the threshold is dropped") {
    std::vector<VantageTraces> sets = {
        {"v",
         {make_trace({gw, r_a1, r_b, gw, user}, false),
          make_trace({gw, r_a1, r_b, gw, user}, false),
          make_trace({gw, r_a1, r_c, gw, user}, false)}}};
    EdgeOptions options;
    options.min_evidence = 2;
    auto graph = infer_edges(sets, pops, options);
    REQUIRE_EQ(graph.edges.size(), 1);
    CHECK_EQ(graph.edges[0].a, "aaaa1");
    CHECK_EQ(graph.edges[0].b, "bbbb1");
    CHECK_EQ(graph.edges[0].evidence, 2);
  }

  SUBCASE("edge delay is the median of per-pair estimates") {
    std::vector<VantageTraces> sets = {
        {"v1", {make_trace({gw, r_a1, r_b, gw, user}, false)}},
        {"v2", {make_trace({gw, r_a2, r_b, gw, user}, false)}},
    };
    EdgeOptions options;
    options.min_evidence = 2;
    options.latency = [&](const std::string& vantage, const Ipv6Addr&, const Ipv6Addr&) {
      return std::optional<double>(vantage == "v1" ? 10.0 : 12.0);
    };
    auto graph = infer_edges(sets, pops, options);
    REQUIRE_EQ(graph.edges.size(), 1);
    CHECK_EQ(graph.edges[0].one_way_delay_ms, doctest::Approx(11.0));
  }
}

TEST_CASE("graph export annotates distances and keeps a stable order") {
  BackboneGraph graph;
  graph.nodes = {{"sttlwax1", "", {}, {}}, {"chcoilx1", "", {}, {}}, {"dllstxx1", "", {}, {}}};
  graph.edges = {{"chcoilx1", "sttlwax1", 22.0, {}, 8},
                 {"chcoilx1", "dllstxx1", 11.0, {}, 4}};

  SiteTable sites = {
      {"sttlwax1", {"Seattle", 47.6062, -122.3321}},
      {"chcoilx1", {"Chicago", 41.8781, -87.6298}},
  };

  auto doc = export_graph(graph, sites);
  REQUIRE_EQ(doc["nodes"].size(), 3);
  CHECK_EQ(doc["nodes"][0]["pop"], "chcoilx1");  // sorted
  CHECK_EQ(doc["nodes"][2]["label"], "Seattle");

  REQUIRE_EQ(doc["edges"].size(), 2);
  CHECK_EQ(doc["edges"][0]["b"], "dllstxx1");
  CHECK_FALSE(doc["edges"][0].contains("distance_km"));  // dallas has no coordinates
  // Seattle-Chicago great circle, cross-checked against a separate
  // haversine evaluation: 2788.86 km
  CHECK_EQ(doc["edges"][1]["distance_km"].get<double>(),
           doctest::Approx(2788.86).epsilon(0.001));

  auto empty = export_graph({}, sites);
  CHECK(empty["nodes"].empty());
  CHECK(empty["edges"].empty());

  CHECK_EQ(great_circle_km(47.6062, -122.3321, 41.8781, -87.6298),
           doctest::Approx(2788.86).epsilon(0.001));
  CHECK_EQ(great_circle_km(10, 20, 10, 20), 0);
}

TEST_CASE("site tables parse with or without a header") {
  std::istringstream in(
      "pop,label,lat,lon\n"
      "sttlwax1,Seattle,47.6062,-122.3321\n"
      "# comment\n"
      "chcoilx1,Chicago,41.8781,-87.6298\n");
  auto sites = load_sites(in);
  REQUIRE_EQ(sites.size(), 2);
  CHECK_EQ(sites["sttlwax1"].label, "Seattle");
  CHECK_EQ(sites["chcoilx1"].lat, doctest::Approx(41.8781));

  std::istringstream bad("sttlwax1,Seattle,not-a-number,0\n");
  CHECK_THROWS_AS(load_sites(bad), Error);
}

TEST_CASE("the full pipeline recovers a small line topology exactly") {
  auto topo = SimTopology::build(testutil::line4_config());

  std::vector<Ipv6Addr> targets;
  for (const auto& user : topo->users()) targets.push_back(user.addr);

  SimProber sea(topo, "v-sea"), nyc(topo, "v-nyc");
  std::vector<std::pair<std::string, Prober*>> vantages = {{"v-sea", &sea},
                                                           {"v-nyc", &nyc}};

  auto result = map_backbone(targets, vantages, sim_policy());

  std::set<std::string> nodes;
  for (const auto& node : result.graph.nodes) nodes.insert(node.pop);
  CHECK_EQ(nodes, std::set<std::string>{"chcoilx1", "dnvrcox1", "nwyynyx1", "sttlwax1"});

  std::set<std::pair<std::string, std::string>> edges;
  std::map<std::pair<std::string, std::string>, double> delays;
  for (const auto& edge : result.graph.edges) {
    edges.insert({edge.a, edge.b});
    delays[{edge.a, edge.b}] = edge.one_way_delay_ms;
  }
  std::set<std::pair<std::string, std::string>> expected = {
      {"dnvrcox1", "sttlwax1"}, {"chcoilx1", "dnvrcox1"}, {"chcoilx1", "nwyynyx1"}};
  CHECK_EQ(edges, expected);
  CHECK_EQ(delays[{"dnvrcox1", "sttlwax1"}], doctest::Approx(20).epsilon(0.05));
  CHECK_EQ(delays[{"chcoilx1", "dnvrcox1"}], doctest::Approx(17).epsilon(0.06));
  CHECK_EQ(delays[{"chcoilx1", "nwyynyx1"}], doctest::Approx(13).epsilon(0.08));

  // every router the traces surfaced was attributed by its ptr
  for (const auto& router : result.routers) {
    CHECK_EQ(router.attribution, BackboneRouter::Attribution::Ptr);
    CHECK_EQ(router.pop, topo->router_pop(router.addr));
    CHECK_FALSE(router.evidence.empty());
  }
  CHECK(result.uncovered_pops.empty());
}
