#include "leomap/simnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "leomap/util.hpp"

namespace leomap {

namespace {

using nlohmann::json;

constexpr double kEps = 1e-9;

bool is_user_pattern(const Ipv6Addr& addr) {
  return (addr.hi & 0xff) == 0 && addr.lo == 1;
}

Ipv6Addr parse_addr(const json& value, const char* context) {
  if (!value.is_string())
    fail(Errc::InvalidTopology, std::string(context) + ": expected an address string");
  auto addr = Ipv6Addr::parse(value.get<std::string>());
  if (!addr)
    fail(Errc::InvalidTopology,
         std::string(context) + ": bad address \"" + value.get<std::string>() + "\"");
  return *addr;
}

Ipv6Prefix parse_prefix(const json& value, const char* context) {
  if (!value.is_string())
    fail(Errc::InvalidTopology, std::string(context) + ": expected a prefix string");
  auto prefix = Ipv6Prefix::parse(value.get<std::string>());
  if (!prefix)
    fail(Errc::InvalidTopology,
         std::string(context) + ": bad prefix \"" + value.get<std::string>() + "\"");
  return *prefix;
}

}  // namespace

SimConfig SimConfig::from_json(const json& doc) {
  SimConfig config;
  try {
    config.seed = doc.value("seed", uint64_t{0});
    config.mpls_inflation_ms = doc.value("mpls_inflation_ms", 0.0);
    config.jitter_ms = doc.value("jitter_ms", 0.0);
    config.access_delay_ms = doc.value("access_delay_ms", 20.0);
    config.gateway_router_delay_ms = doc.value("gateway_router_delay_ms", 0.5);
    config.intra_pop_router_delay_ms = doc.value("intra_pop_router_delay_ms", 1.0);
    config.last_mile_delay_ms = doc.value("last_mile_delay_ms", 20.0);
    config.loss_rate = doc.value("loss_rate", 0.0);
    config.anon_hop_rate = doc.value("anon_hop_rate", 0.0);
    config.gateway_ptr = doc.value("gateway_ptr", false);

    for (const auto& p : doc.value("pops", json::array())) {
      Pop pop;
      pop.code = p.at("code").get<std::string>();
      pop.label = p.value("label", std::string{});
      for (const auto& r : p.value("routers", json::array()))
        pop.routers.push_back(parse_addr(r, "pop router"));
      if (p.contains("lat")) pop.lat = p.at("lat").get<double>();
      if (p.contains("lon")) pop.lon = p.at("lon").get<double>();
      config.pops.push_back(std::move(pop));
    }
    for (const auto& l : doc.value("links", json::array()))
      config.links.push_back({l.at("a").get<std::string>(), l.at("b").get<std::string>(),
                              l.at("one_way_delay_ms").get<double>()});
    for (const auto& g : doc.value("gateways", json::array()))
      config.gateways.push_back(
          {parse_addr(g.at("addr"), "gateway"), g.at("pop").get<std::string>()});
    for (const auto& u : doc.value("users", json::array())) {
      User user;
      user.addr = parse_addr(u.at("addr"), "user");
      user.pop = u.at("pop").get<std::string>();
      user.geo.prefix = parse_prefix(u.at("prefix"), "user");
      user.geo.country = u.value("country", std::string{});
      user.geo.region_code = u.value("region_code", std::string{});
      user.geo.city = u.value("city", std::string{});
      config.users.push_back(std::move(user));
    }
    for (const auto& g : doc.value("user_groups", json::array())) {
      UserGroup group;
      group.prefix = parse_prefix(g.at("prefix"), "user group");
      group.count = g.at("count").get<uint64_t>();
      group.pop = g.at("pop").get<std::string>();
      group.country = g.value("country", std::string{});
      group.region_code = g.value("region_code", std::string{});
      group.city = g.value("city", std::string{});
      config.user_groups.push_back(std::move(group));
    }
    for (const auto& v : doc.value("vantages", json::array()))
      config.vantages.push_back({v.at("name").get<std::string>(), v.at("pop").get<std::string>()});
    for (const auto& a : doc.value("silent_users", json::array()))
      config.silent_users.push_back(parse_addr(a, "silent user"));
    for (const auto& a : doc.value("suppressed_ptrs", json::array()))
      config.suppressed_ptrs.push_back(parse_addr(a, "suppressed ptr"));
  } catch (const json::exception& e) {
    fail(Errc::InvalidTopology, std::string("sim config: ") + e.what());
  }
  return config;
}

SimConfig SimConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::InvalidArgument, "cannot open sim config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    fail(Errc::InvalidTopology, path + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::ordered_json SimConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["seed"] = seed;
  doc["mpls_inflation_ms"] = mpls_inflation_ms;
  doc["jitter_ms"] = jitter_ms;
  doc["access_delay_ms"] = access_delay_ms;
  doc["gateway_router_delay_ms"] = gateway_router_delay_ms;
  doc["intra_pop_router_delay_ms"] = intra_pop_router_delay_ms;
  doc["last_mile_delay_ms"] = last_mile_delay_ms;
  doc["loss_rate"] = loss_rate;
  doc["anon_hop_rate"] = anon_hop_rate;
  doc["gateway_ptr"] = gateway_ptr;

  auto pops_doc = nlohmann::ordered_json::array();
  for (const auto& pop : pops) {
    nlohmann::ordered_json row{{"code", pop.code}, {"label", pop.label}};
    auto routers = nlohmann::ordered_json::array();
    for (const auto& r : pop.routers) routers.push_back(r.str());
    row["routers"] = std::move(routers);
    if (pop.lat) row["lat"] = *pop.lat;
    if (pop.lon) row["lon"] = *pop.lon;
    pops_doc.push_back(std::move(row));
  }
  doc["pops"] = std::move(pops_doc);

  auto links_doc = nlohmann::ordered_json::array();
  for (const auto& link : links)
    links_doc.push_back({{"a", link.a}, {"b", link.b}, {"one_way_delay_ms", link.one_way_delay_ms}});
  doc["links"] = std::move(links_doc);

  auto gateways_doc = nlohmann::ordered_json::array();
  for (const auto& gw : gateways)
    gateways_doc.push_back({{"addr", gw.addr.str()}, {"pop", gw.pop}});
  doc["gateways"] = std::move(gateways_doc);

  auto users_doc = nlohmann::ordered_json::array();
  for (const auto& user : users)
    users_doc.push_back({{"addr", user.addr.str()},
                         {"pop", user.pop},
                         {"prefix", user.geo.prefix.str()},
                         {"country", user.geo.country},
                         {"region_code", user.geo.region_code},
                         {"city", user.geo.city}});
  doc["users"] = std::move(users_doc);

  auto groups_doc = nlohmann::ordered_json::array();
  for (const auto& group : user_groups)
    groups_doc.push_back({{"prefix", group.prefix.str()},
                          {"count", group.count},
                          {"pop", group.pop},
                          {"country", group.country},
                          {"region_code", group.region_code},
                          {"city", group.city}});
  doc["user_groups"] = std::move(groups_doc);

  auto vantages_doc = nlohmann::ordered_json::array();
  for (const auto& vantage : vantages)
    vantages_doc.push_back({{"name", vantage.name}, {"pop", vantage.pop}});
  doc["vantages"] = std::move(vantages_doc);

  auto silent_doc = nlohmann::ordered_json::array();
  for (const auto& addr : silent_users) silent_doc.push_back(addr.str());
  doc["silent_users"] = std::move(silent_doc);
  auto suppressed_doc = nlohmann::ordered_json::array();
  for (const auto& addr : suppressed_ptrs) suppressed_doc.push_back(addr.str());
  doc["suppressed_ptrs"] = std::move(suppressed_doc);
  return doc;
}

std::shared_ptr<const SimTopology> SimTopology::build(const SimConfig& config) {
  auto topo = std::shared_ptr<SimTopology>(new SimTopology());
  topo->config_ = config;

  auto invalid = [](const std::string& what) { fail(Errc::InvalidTopology, what); };

  if (config.pops.empty()) invalid("at least one pop required");

  // Pops ordered by code so index order is lexicographic.
  std::vector<SimConfig::Pop> pops = config.pops;
  std::sort(pops.begin(), pops.end(),
            [](const auto& a, const auto& b) { return a.code < b.code; });

  std::unordered_set<Ipv6Addr, Ipv6AddrHash> all_addrs;
  auto claim_addr = [&](const Ipv6Addr& addr, const char* what) {
    if (!all_addrs.insert(addr).second)
      invalid(std::string("duplicate address ") + addr.str() + " (" + what + ")");
  };

  std::vector<PopId> pop_ids;
  for (const auto& pop : pops) {
    auto id = try_parse_pop_code(pop.code);
    if (!id) invalid("pop code \"" + pop.code + "\" is not a valid code");
    if (topo->pop_by_code_.count(pop.code)) invalid("duplicate pop " + pop.code);
    if (pop.routers.empty()) invalid("pop " + pop.code + " has no routers");
    for (const auto& r : pop.routers) claim_addr(r, "router");

    topo->pop_by_code_[pop.code] = topo->pops_.size();
    topo->pops_.push_back({pop.code, pop.label, pop.routers, {}, pop.lat, pop.lon});
    pop_ids.push_back(std::move(*id));
  }
  size_t n = topo->pops_.size();

  for (size_t pi = 0; pi < n; ++pi) {
    auto& pop = topo->pops_[pi];
    for (size_t ri = 0; ri < pop.routers.size(); ++ri) {
      topo->router_by_addr_[pop.routers[ri]] = {pi, ri};
      topo->ptr_zone_[pop.routers[ri]] =
          pop_host_ptr_name("edge" + std::to_string(ri + 1), pop_ids[pi]);
    }
  }

  topo->links_.resize(n);
  std::set<std::pair<size_t, size_t>> link_pairs;
  for (const auto& link : config.links) {
    auto a = topo->pop_by_code_.find(link.a);
    auto b = topo->pop_by_code_.find(link.b);
    if (a == topo->pop_by_code_.end() || b == topo->pop_by_code_.end())
      invalid("link references unknown pop " + link.a + "/" + link.b);
    if (a->second == b->second) invalid("self-link on pop " + link.a);
    if (!(link.one_way_delay_ms > 0)) invalid("link delay must be positive");
    auto key = std::minmax(a->second, b->second);
    if (!link_pairs.insert({key.first, key.second}).second)
      invalid("duplicate link " + link.a + " - " + link.b);
    topo->links_[a->second].push_back({b->second, link.one_way_delay_ms});
    topo->links_[b->second].push_back({a->second, link.one_way_delay_ms});
  }

  std::map<std::string, size_t> gateway_counter;
  for (const auto& gw : config.gateways) {
    auto pop = topo->pop_by_code_.find(gw.pop);
    if (pop == topo->pop_by_code_.end()) invalid("gateway references unknown pop " + gw.pop);
    claim_addr(gw.addr, "gateway");
    topo->gateway_pop_[gw.addr] = pop->second;
    topo->pops_[pop->second].gateways.push_back(gw.addr);
    if (config.gateway_ptr) {
      size_t i = ++gateway_counter[gw.pop];
      topo->ptr_zone_[gw.addr] =
          pop_host_ptr_name("gw" + std::to_string(i), pop_ids[pop->second]);
    }
  }

  // Shortest-path trees from every pop; O(P^2) selection is fine at the
  // pop counts this models.
  topo->parent_.assign(n, std::vector<int>(n, -1));
  topo->dist_.assign(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (size_t src = 0; src < n; ++src) {
    auto& dist = topo->dist_[src];
    auto& parent = topo->parent_[src];
    std::vector<bool> done(n, false);
    dist[src] = 0;
    for (size_t round = 0; round < n; ++round) {
      size_t u = n;
      for (size_t i = 0; i < n; ++i)
        if (!done[i] && (u == n || dist[i] < dist[u] - kEps)) u = i;
      if (u == n || std::isinf(dist[u])) break;
      done[u] = true;
      for (auto [v, w] : topo->links_[u]) {
        double nd = dist[u] + w;
        if (nd < dist[v] - kEps) {
          dist[v] = nd;
          parent[v] = static_cast<int>(u);
        } else if (std::abs(nd - dist[v]) <= kEps && parent[v] >= 0 &&
                   static_cast<int>(u) < parent[v]) {
          parent[v] = static_cast<int>(u);
        }
      }
    }
    if (n > 1)
      for (size_t i = 0; i < n; ++i)
        if (std::isinf(dist[i]))
          invalid("link graph is not connected (" + topo->pops_[i].code +
                  " unreachable from " + topo->pops_[src].code + ")");
  }

  // Users: explicit ones first, then deterministic samples per group.
  auto add_user = [&](const Ipv6Addr& addr, const std::string& pop_code,
                      GeoIpEntry geo) {
    auto pop = topo->pop_by_code_.find(pop_code);
    if (pop == topo->pop_by_code_.end())
      invalid("user " + addr.str() + " references unknown pop " + pop_code);
    if (!is_user_pattern(addr))
      invalid("user " + addr.str() + " does not match the user-router bit pattern");
    if (!geo.prefix.contains(addr))
      invalid("user " + addr.str() + " lies outside its prefix " + geo.prefix.str());
    if (topo->pops_[pop->second].gateways.empty())
      invalid("pop " + pop_code + " hosts users but has no gateway");
    claim_addr(addr, "user");

    const auto& gws = topo->pops_[pop->second].gateways;
    uint64_t pick = detail::mix(config.seed, detail::mix(detail::fnv1a("ugw"),
                                                         Ipv6AddrHash{}(addr)));
    UserInfo user{addr, pop_code, std::move(geo), gws[pick % gws.size()], false};
    topo->user_by_addr_[addr] = topo->users_.size();
    topo->ptr_zone_[addr] = customer_ptr_name(pop_ids[pop->second]);
    topo->users_.push_back(std::move(user));
  };

  for (const auto& user : config.users) add_user(user.addr, user.pop, user.geo);

  for (size_t gi = 0; gi < config.user_groups.size(); ++gi) {
    const auto& group = config.user_groups[gi];
    if (group.prefix.length > 56)
      invalid("user group prefix " + group.prefix.str() + " is longer than /56");
    uint64_t space = uint64_t{1} << (56 - group.prefix.length);
    if (group.count > space)
      invalid("user group " + group.prefix.str() + " cannot hold " +
              std::to_string(group.count) + " users");

    CandidateStream stream(group.prefix, 56, std::numeric_limits<uint64_t>::max());
    std::vector<uint64_t> picks;
    detail::Rng rng(detail::mix(config.seed, detail::mix(detail::fnv1a("users"), gi)));
    if (group.count == space || space <= (uint64_t{1} << 22)) {
      std::vector<uint64_t> all(space);
      std::iota(all.begin(), all.end(), uint64_t{0});
      for (size_t i = all.size(); i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
      picks.assign(all.begin(), all.begin() + static_cast<ptrdiff_t>(group.count));
    } else {
      std::set<uint64_t> chosen;
      while (chosen.size() < group.count) chosen.insert(rng.next() % space);
      picks.assign(chosen.begin(), chosen.end());
    }
    std::sort(picks.begin(), picks.end());

    GeoIpEntry geo{group.prefix, group.country, group.region_code, group.city};
    for (uint64_t pick : picks) add_user(stream.at(pick), group.pop, geo);
  }

  // One allocation prefix must not claim two different locations.
  std::map<Ipv6Prefix, GeoIpEntry> geo_rows;
  for (const auto& user : topo->users_) {
    auto [it, inserted] = geo_rows.try_emplace(user.geo.prefix, user.geo);
    if (!inserted && !(it->second == user.geo))
      invalid("prefix " + user.geo.prefix.str() + " maps to conflicting locations");
  }

  for (const auto& addr : config.silent_users) {
    auto it = topo->user_by_addr_.find(addr);
    if (it == topo->user_by_addr_.end())
      invalid("silent user " + addr.str() + " is not a configured user");
    topo->users_[it->second].silent = true;
  }
  for (const auto& addr : config.suppressed_ptrs) {
    if (!topo->ptr_zone_.count(addr))
      invalid("suppressed ptr " + addr.str() + " has no zone entry");
    topo->suppressed_.insert(addr);
  }

  for (const auto& vantage : config.vantages) {
    auto pop = topo->pop_by_code_.find(vantage.pop);
    if (pop == topo->pop_by_code_.end())
      invalid("vantage " + vantage.name + " references unknown pop " + vantage.pop);
    if (topo->vantage_pop_.count(vantage.name))
      invalid("duplicate vantage name " + vantage.name);
    const auto& gws = topo->pops_[pop->second].gateways;
    if (gws.empty()) invalid("vantage pop " + vantage.pop + " has no gateway");
    uint64_t pick = detail::mix(config.seed,
                                detail::mix(detail::fnv1a("vgw"), detail::fnv1a(vantage.name)));
    topo->vantage_pop_[vantage.name] = pop->second;
    topo->vantage_gateway_[vantage.name] = gws[pick % gws.size()];
  }

  return topo;
}

size_t SimTopology::pop_index(const std::string& code) const {
  auto it = pop_by_code_.find(code);
  if (it == pop_by_code_.end()) fail(Errc::InvalidArgument, "unknown pop " + code);
  return it->second;
}

std::vector<size_t> SimTopology::route(size_t from_pop, size_t to_pop) const {
  std::vector<size_t> path;
  int cursor = static_cast<int>(to_pop);
  while (cursor >= 0 && static_cast<size_t>(cursor) != from_pop) {
    path.push_back(static_cast<size_t>(cursor));
    cursor = parent_[from_pop][static_cast<size_t>(cursor)];
  }
  path.push_back(from_pop);
  std::reverse(path.begin(), path.end());
  return path;
}

double SimTopology::rng_jitter(const char* stream, const Ipv6Addr& target, int ttl,
                               int sample) const {
  if (config_.jitter_ms <= 0) return 0;
  uint64_t key = detail::mix(config_.seed, detail::fnv1a(stream));
  key = detail::mix(key, Ipv6AddrHash{}(target));
  key = detail::mix(key, static_cast<uint64_t>(ttl) << 16 | static_cast<uint64_t>(sample));
  detail::Rng rng(key);
  return rng.uniform(-config_.jitter_ms, config_.jitter_ms);
}

bool SimTopology::rng_event(const char* stream, const Ipv6Addr& addr, int salt,
                            double probability) const {
  if (probability <= 0) return false;
  if (probability >= 1) return true;
  uint64_t key = detail::mix(config_.seed, detail::fnv1a(stream));
  key = detail::mix(key, Ipv6AddrHash{}(addr));
  key = detail::mix(key, static_cast<uint64_t>(salt));
  detail::Rng rng(key);
  return rng.unit() < probability;
}

std::vector<double> SimTopology::hop_rtts(const Ipv6Addr& trace_target, int ttl,
                                          double one_way_ms, double inflation_ms,
                                          int samples) const {
  std::vector<double> rtts;
  rtts.reserve(static_cast<size_t>(samples));
  for (int s = 0; s < samples; ++s) {
    double rtt = 2 * one_way_ms + inflation_ms + rng_jitter("rtt", trace_target, ttl, s);
    rtts.push_back(std::max(0.0, rtt));
  }
  return rtts;
}

EchoStatus SimTopology::answer_echo(const Ipv6Addr& addr, int attempts) const {
  bool known = router_by_addr_.count(addr) || gateway_pop_.count(addr);
  if (!known) {
    auto it = user_by_addr_.find(addr);
    if (it == user_by_addr_.end() || users_[it->second].silent) return EchoStatus::Silent;
    known = true;
  }
  for (int attempt = 0; attempt < attempts; ++attempt)
    if (!rng_event("echo", addr, attempt, config_.loss_rate)) return EchoStatus::Alive;
  return EchoStatus::Silent;
}

PtrOutcome SimTopology::answer_ptr(const Ipv6Addr& addr) const {
  auto it = ptr_zone_.find(addr);
  if (it == ptr_zone_.end() || suppressed_.count(addr))
    return {std::nullopt, PtrOutcome::Reason::NoRecord};
  return {it->second, PtrOutcome::Reason::Found};
}

TracerouteResult SimTopology::answer_traceroute(const std::string& vantage,
                                                const Ipv6Addr& target, int max_ttl,
                                                int samples_per_hop) const {
  if (max_ttl < 1 || max_ttl > 64) fail(Errc::InvalidArgument, "max_ttl must lie in [1, 64]");
  auto vp = vantage_pop_.find(vantage);
  if (vp == vantage_pop_.end()) fail(Errc::InvalidArgument, "unknown vantage " + vantage);
  size_t from_pop = vp->second;

  // Resolve the target: its pop, how deep into that pop's router chain the
  // path goes, and the hops appended after the chain.
  size_t to_pop;
  size_t chain_len;  // routers transited in the target pop
  enum class Tail { User, Router, Gateway } tail;
  Ipv6Addr user_gateway{};
  bool target_answers = true;

  if (auto user = user_by_addr_.find(target); user != user_by_addr_.end()) {
    const auto& info = users_[user->second];
    to_pop = pop_index(info.pop);
    uint64_t pick = detail::mix(config_.seed, detail::mix(detail::fnv1a("chain"),
                                                          Ipv6AddrHash{}(target)));
    chain_len = 1 + pick % pops_[to_pop].routers.size();
    tail = Tail::User;
    user_gateway = info.gateway;
    target_answers = !info.silent;
  } else if (auto router = router_by_addr_.find(target); router != router_by_addr_.end()) {
    to_pop = router->second.pop;
    chain_len = router->second.index + 1;
    tail = Tail::Router;
  } else if (auto gw = gateway_pop_.find(target); gw != gateway_pop_.end()) {
    to_pop = gw->second;
    chain_len = 1;
    tail = Tail::Gateway;
  } else {
    fail(Errc::UnknownTarget, target.str() + " is not part of the topology");
  }

  // Hop skeleton: (responder, cumulative one-way delay, backbone router?).
  struct Step {
    Ipv6Addr addr;
    double delay;
    bool backbone;
  };
  std::vector<Step> steps;

  double cum = config_.access_delay_ms;
  steps.push_back({vantage_gateway_.at(vantage), cum, false});

  auto pop_path = route(from_pop, to_pop);
  for (size_t i = 0; i < pop_path.size(); ++i) {
    size_t pop = pop_path[i];
    cum += i == 0 ? config_.gateway_router_delay_ms
                  : dist_[from_pop][pop] - dist_[from_pop][pop_path[i - 1]];
    size_t depth = pop == to_pop ? chain_len : 1;
    for (size_t r = 0; r < depth; ++r) {
      if (r > 0) cum += config_.intra_pop_router_delay_ms;
      steps.push_back({pops_[pop].routers[r], cum, true});
    }
  }
  if (tail == Tail::User) {
    cum += config_.gateway_router_delay_ms;
    steps.push_back({user_gateway, cum, false});
    cum += config_.last_mile_delay_ms;
    steps.push_back({target, cum, false});
  } else if (tail == Tail::Gateway) {
    cum += config_.gateway_router_delay_ms;
    steps.push_back({target, cum, false});
  }

  TracerouteResult result;
  result.target = target;
  size_t path_len = steps.size();
  int vantage_salt = static_cast<int>(detail::fnv1a(vantage) & 0x7fffffff);

  for (int ttl = 1; ttl <= max_ttl; ++ttl) {
    size_t idx = static_cast<size_t>(ttl - 1);
    HopObservation hop;
    hop.ttl = ttl;
    if (idx < path_len) {
      const auto& step = steps[idx];
      bool final_hop = idx + 1 == path_len;
      bool anonymous =
          !final_hop &&
          rng_event("anon", target, vantage_salt ^ (ttl << 1), config_.anon_hop_rate);
      bool silent_final = final_hop && !target_answers;
      if (!anonymous && !silent_final) {
        hop.responder = step.addr;
        double inflation = step.backbone && !final_hop ? config_.mpls_inflation_ms : 0;
        hop.rtt_samples = hop_rtts(target, ttl, step.delay, inflation, samples_per_hop);
      }
    }
    result.hops.push_back(std::move(hop));
    if (idx + 1 == path_len && target_answers) {
      result.reached = true;
      break;
    }
  }
  result.validate();
  return result;
}

std::vector<std::string> SimTopology::pop_codes() const {
  std::vector<std::string> codes;
  for (const auto& pop : pops_) codes.push_back(pop.code);
  return codes;
}

std::vector<std::string> SimTopology::vantage_names() const {
  std::vector<std::string> names;
  for (const auto& [name, _] : vantage_pop_) names.push_back(name);
  return names;
}

std::optional<std::string> SimTopology::router_pop(const Ipv6Addr& addr) const {
  auto it = router_by_addr_.find(addr);
  if (it == router_by_addr_.end()) return std::nullopt;
  return pops_[it->second.pop].code;
}

double SimTopology::pop_distance_ms(const std::string& from, const std::string& to) const {
  return dist_[pop_index(from)][pop_index(to)];
}

std::vector<GeoIpEntry> SimTopology::geoip_entries() const {
  std::map<Ipv6Prefix, GeoIpEntry> rows;
  for (const auto& user : users_) rows.try_emplace(user.geo.prefix, user.geo);
  std::vector<GeoIpEntry> out;
  out.reserve(rows.size());
  for (auto& [_, entry] : rows) out.push_back(entry);
  return out;
}

std::string SimTopology::sites_csv() const {
  std::ostringstream out;
  out << "pop,label,lat,lon\n";
  for (const auto& pop : pops_) {
    if (!pop.lat || !pop.lon) continue;
    out << pop.code << ',' << pop.label << ',' << detail::format_ms(*pop.lat) << ','
        << detail::format_ms(*pop.lon) << '\n';
  }
  return out.str();
}

nlohmann::ordered_json SimTopology::ground_truth() const {
  nlohmann::ordered_json doc;
  doc["schema"] = "leomap-ground-truth v1";

  std::vector<size_t> order(users_.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return users_[a].addr < users_[b].addr; });

  auto active = nlohmann::ordered_json::array();
  auto users = nlohmann::ordered_json::array();
  auto user_pops = nlohmann::ordered_json::object();
  for (size_t i : order) {
    const auto& u = users_[i];
    users.push_back({{"addr", u.addr.str()},
                     {"pop", u.pop},
                     {"prefix", u.geo.prefix.str()},
                     {"country", u.geo.country},
                     {"region_code", u.geo.region_code},
                     {"city", u.geo.city},
                     {"silent", u.silent}});
    if (!u.silent) {
      active.push_back(u.addr.str());
      user_pops[u.addr.str()] = u.pop;
    }
  }
  doc["active_users"] = std::move(active);
  doc["users"] = std::move(users);
  doc["user_pops"] = std::move(user_pops);

  auto nodes = nlohmann::ordered_json::array();
  auto pops = nlohmann::ordered_json::array();
  auto routers = nlohmann::ordered_json::object();
  for (const auto& pop : pops_) {
    nodes.push_back(pop.code);
    pops.push_back({{"code", pop.code},
                    {"label", pop.label},
                    {"routers", pop.routers.size()},
                    {"gateways", pop.gateways.size()}});
  }
  std::map<Ipv6Addr, std::string> router_rows;
  for (const auto& [addr, ref] : router_by_addr_) router_rows[addr] = pops_[ref.pop].code;
  for (const auto& [addr, code] : router_rows) routers[addr.str()] = code;

  std::vector<std::tuple<std::string, std::string, double>> edges;
  for (const auto& link : config_.links) {
    auto [a, b] = std::minmax(link.a, link.b);
    edges.emplace_back(a, b, link.one_way_delay_ms);
  }
  std::sort(edges.begin(), edges.end());
  auto edge_rows = nlohmann::ordered_json::array();
  for (const auto& [a, b, delay] : edges)
    edge_rows.push_back({{"a", a}, {"b", b}, {"one_way_delay_ms", delay}});

  doc["pop_graph"] = {{"nodes", std::move(nodes)}, {"edges", std::move(edge_rows)}};
  doc["routers"] = std::move(routers);
  doc["pops"] = std::move(pops);
  return doc;
}

EchoStatus SimProber::echo(const Ipv6Addr& target, const ProbePolicy& policy) {
  return topology_->answer_echo(target, policy.echo_attempts);
}

TracerouteResult SimProber::traceroute(const Ipv6Addr& target, int max_ttl,
                                       const ProbePolicy& policy) {
  try {
    return topology_->answer_traceroute(vantage_, target, max_ttl, policy.retries + 1);
  } catch (const Error& e) {
    if (e.code() != Errc::UnknownTarget) throw;
    // Nothing in the topology answers: every hop times out.
    TracerouteResult result;
    result.target = target;
    for (int ttl = 1; ttl <= max_ttl; ++ttl) result.hops.push_back({ttl, std::nullopt, {}});
    return result;
  }
}

PtrOutcome SimProber::resolve_ptr(const Ipv6Addr& addr, const ProbePolicy&) {
  return topology_->answer_ptr(addr);
}

}  // namespace leomap
