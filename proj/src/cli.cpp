#include "leomap/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "leomap/backbone.hpp"
#include "leomap/discovery.hpp"
#include "leomap/geoip.hpp"
#include "leomap/simnet.hpp"
#include "leomap/util.hpp"

namespace leomap {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- manifest

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(uint64_t value) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

struct Manifest {
  std::string command;
  std::string adapter = "none";
  uint64_t seed = 0;
  std::vector<std::string> flags;
  std::vector<std::string> inputs;
  std::chrono::system_clock::time_point started = std::chrono::system_clock::now();

  void write(const std::string& out_path) const {
    nlohmann::ordered_json doc;
    doc["schema"] = "leomap-run-manifest v1";
    doc["command"] = command;
    doc["adapter"] = adapter;
    doc["seed"] = seed;
    std::string joined;
    for (const auto& flag : flags) joined += flag + "\n";
    doc["config_digest"] = hex64(detail::fnv1a(joined));
    auto digests = nlohmann::ordered_json::object();
    for (const auto& path : inputs) {
      try {
        digests[path] = hex64(detail::fnv1a(detail::read_file(path)));
      } catch (const std::exception&) {
        digests[path] = nullptr;
      }
    }
    doc["input_digests"] = std::move(digests);
    doc["started_at"] = iso_utc(started);
    doc["finished_at"] = iso_utc(std::chrono::system_clock::now());

    std::ofstream out(out_path);
    if (out) out << doc.dump(2) << '\n';
  }
};

std::string manifest_path(const std::string& out) {
  fs::path p(out);
  if (fs::is_directory(p)) return (p / "manifest.json").string();
  return out + ".manifest.json";
}

// ------------------------------------------------------------------ shared

struct AdapterFlags {
  std::string adapter = "sim";
  std::string sim_config;
  std::string vantage;  // sim vantage used when one is needed
};

struct PolicyFlags {
  ProbePolicy policy;
  int64_t timestamp = 0;
  std::string blocklist;
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& flags) {
  cmd->add_option("--rate", flags.policy.rate_per_second, "Probe dispatch rate per second");
  cmd->add_option("--timeout-ms", flags.policy.timeout_ms, "Per-probe timeout");
  cmd->add_option("--retries", flags.policy.retries, "Extra probes per hop");
  cmd->add_option("--max-in-flight", flags.policy.max_in_flight, "Concurrent probe bound");
  cmd->add_option("--echo-attempts", flags.policy.echo_attempts, "Echo probes per target");
  cmd->add_option("--seed", flags.policy.seed, "Seed for all randomized behaviour");
  cmd->add_flag("--randomize,!--no-randomize", flags.policy.randomize_order,
                "Randomize target order (default on for the live adapter)");
  cmd->add_option("--timestamp", flags.timestamp,
                  "discovered_at value for new records (sim runs default to 0)");
  cmd->add_option("--blocklist", flags.blocklist, "File of prefixes never probed");
}

void add_adapter_flags(CLI::App* cmd, AdapterFlags& flags) {
  cmd->add_option("--adapter", flags.adapter, "Measurement adapter")
      ->check(CLI::IsMember({"sim", "live"}))
      ->capture_default_str();
  cmd->add_option("--sim-config", flags.sim_config, "Topology document for the sim adapter");
  cmd->add_option("--vantage", flags.vantage, "Sim vantage for single-vantage commands");
}

struct Adapter {
  std::shared_ptr<const SimTopology> topology;  // sim only
  std::unique_ptr<Prober> prober;
};

Adapter make_adapter(const AdapterFlags& flags, PolicyFlags& policy, bool live_randomizes) {
  Adapter adapter;
  if (flags.adapter == "sim") {
    if (flags.sim_config.empty())
      fail(Errc::InvalidArgument, "--sim-config is required with --adapter sim");
    auto config = SimConfig::from_file(flags.sim_config);
    config.seed = policy.policy.seed ? policy.policy.seed : config.seed;
    adapter.topology = SimTopology::build(config);
    std::string vantage = flags.vantage;
    if (vantage.empty()) {
      auto names = adapter.topology->vantage_names();
      if (!names.empty()) vantage = names.front();
    }
    adapter.prober = std::make_unique<SimProber>(adapter.topology, vantage);
  } else {
    if (live_randomizes) policy.policy.randomize_order = true;
    policy.timestamp = policy.timestamp
                           ? policy.timestamp
                           : std::chrono::duration_cast<std::chrono::seconds>(
                                 std::chrono::system_clock::now().time_since_epoch())
                                 .count();
    adapter.prober = std::make_unique<LiveProber>();
  }
  return adapter;
}

std::vector<std::string> split_csv_flag(const std::string& value) {
  std::vector<std::string> out;
  for (auto& part : detail::split(value, ','))
    if (!detail::trim(part).empty()) out.emplace_back(detail::trim(part));
  return out;
}

// Region keys are "country/region_code/city"; the city may contain slashes.
std::array<std::string, 3> split_region_key(const std::string& key) {
  auto first = key.find('/');
  auto second = key.find('/', first + 1);
  return {key.substr(0, first), key.substr(first + 1, second - first - 1),
          key.substr(second + 1)};
}

std::string pop_table_csv(const DiscoveryStats& stats, const SiteTable& sites) {
  std::vector<const PopServiceStats*> rows;
  for (const auto& [_, pop] : stats.pop_stats) rows.push_back(&pop);
  std::sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    return std::tie(b->user_count, a->pop.code) < std::tie(a->user_count, b->pop.code);
  });

  std::ostringstream out;
  out << "pop,location,users_served,regions_served\n";
  for (const auto* row : rows) {
    auto site = sites.find(row->pop.code);
    out << row->pop.code << ',' << (site != sites.end() ? site->second.label : "") << ','
        << row->user_count << ',' << row->regions.size() << '\n';
  }
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::InvalidArgument, "cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------- commands

int cmd_gen(const std::string& geoip_path, int plen, uint64_t cap,
            const std::string& out_path, Manifest& manifest) {
  auto feed = load_geoip_file(geoip_path);
  for (const auto& error : feed.errors)
    std::cerr << "geoip:" << error.line_no << ": " << error.message << '\n';

  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail(Errc::InvalidArgument, "cannot write " + out_path);

  uint64_t total = 0;
  for (const auto& entry : feed.entries) {
    try {
      CandidateStream stream(entry.prefix, plen, cap);
      for (const auto& addr : stream) out << addr.str() << '\n';
      total += stream.size();
      std::cout << entry.prefix.str() << '\t' << stream.size() << '\n';
    } catch (const Error& e) {
      if (e.code() != Errc::PrefixTooShort && e.code() != Errc::InvalidArgument) throw;
      std::cerr << entry.prefix.str() << ": skipped (" << errc_name(e.code()) << ": "
                << e.what() << ")\n";
    }
  }
  std::cout << "total\t" << total << '\n';
  manifest.write(manifest_path(out_path));
  return 0;
}

int cmd_scan(const std::string& geoip_path, const std::string& candidates_path,
             const AdapterFlags& adapter_flags, PolicyFlags& policy_flags, int plen,
             uint64_t cap, const std::string& out_path, Manifest& manifest) {
  auto adapter = make_adapter(adapter_flags, policy_flags, /*live_randomizes=*/true);
  manifest.adapter = adapter_flags.adapter;

  Blocklist blocklist;
  if (!policy_flags.blocklist.empty())
    blocklist = Blocklist::load_file(policy_flags.blocklist);

  auto feed = load_geoip_file(geoip_path);
  std::vector<UserRecord> records;
  ScanReport report;

  if (candidates_path.empty()) {
    ScanOptions options{plen, cap, policy_flags.timestamp};
    records = scan_allocations(feed.entries, *adapter.prober, policy_flags.policy, options,
                               &report, &blocklist);
  } else {
    GeoIndex index(feed.entries);
    std::vector<Ipv6Addr> targets;
    std::ifstream in(candidates_path);
    if (!in) fail(Errc::InvalidArgument, "cannot open candidates " + candidates_path);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto text = detail::trim(line);
      if (text.empty() || text.front() == '#') continue;
      auto addr = Ipv6Addr::parse(text);
      if (!addr)
        fail(Errc::InvalidArgument,
             candidates_path + ":" + std::to_string(line_no) + ": bad address");
      targets.push_back(*addr);
    }

    auto results = run_batch(
        targets,
        [&](const Ipv6Addr& t) { return adapter.prober->echo(t, policy_flags.policy); },
        policy_flags.policy, &blocklist);
    uint64_t no_geo = 0;
    for (const auto& item : results) {
      if (!item.ok() || *item.value != EchoStatus::Alive) continue;
      const auto* entry = index.lookup(item.target);
      if (!entry) {
        ++no_geo;
        continue;
      }
      ++report.alive;
      records.push_back({item.target, *entry, std::nullopt, policy_flags.timestamp,
                         std::nullopt});
    }
    report.candidates = targets.size();
    if (no_geo) std::cerr << no_geo << " alive addresses had no feed entry, dropped\n";
  }

  for (const auto& alloc : report.allocations) {
    if (!alloc.error.empty())
      std::cerr << alloc.prefix.str() << ": skipped (" << alloc.error << ")\n";
    else
      std::cout << alloc.prefix.str() << '\t' << alloc.candidates << " candidates\t"
                << alloc.alive << " alive\n";
  }
  std::cout << "total\t" << report.candidates << " candidates\t" << records.size()
            << " alive\n";

  save_dataset(out_path, records);
  manifest.write(manifest_path(out_path));
  return 0;
}

int cmd_pops(const std::string& dataset_path, const AdapterFlags& adapter_flags,
             PolicyFlags& policy_flags, const std::string& sites_path,
             const std::string& out_path, Manifest& manifest) {
  auto adapter = make_adapter(adapter_flags, policy_flags, /*live_randomizes=*/false);
  manifest.adapter = adapter_flags.adapter;

  auto load = load_dataset(dataset_path);
  for (const auto& corrupt : load.corrupt_lines)
    std::cerr << dataset_path << ":" << corrupt.line_no << ": " << corrupt.message << '\n';

  auto report = associate_pops(load.records, *adapter.prober, policy_flags.policy);
  save_dataset(out_path, load.records);

  SiteTable sites;
  if (!sites_path.empty()) sites = load_sites_file(sites_path);
  std::cout << pop_table_csv(compute_stats(load.records), sites);
  std::cerr << "customer-ptr " << report.customer << ", no-ptr " << report.no_ptr
            << ", foreign-ptr " << report.foreign_ptr << '\n';

  manifest.write(manifest_path(out_path));
  return 0;
}

int cmd_map(const std::string& dataset_path, const std::string& vantages_flag,
            const AdapterFlags& adapter_flags, PolicyFlags& policy_flags,
            const std::string& sites_path, const MapOptions& options,
            const std::string& out_path, Manifest& manifest) {
  auto vantage_names = split_csv_flag(vantages_flag);
  if (vantage_names.empty()) fail(Errc::InvalidArgument, "--vantages must name at least one vantage");

  auto load = load_dataset(dataset_path);
  std::vector<Ipv6Addr> targets;
  std::set<std::string> known_pops;
  for (const auto& record : load.records) {
    targets.push_back(record.addr);
    if (record.home_pop) known_pops.insert(record.home_pop->code);
  }

  std::vector<std::unique_ptr<Prober>> probers;
  std::vector<std::pair<std::string, Prober*>> vantages;
  manifest.adapter = adapter_flags.adapter;

  if (adapter_flags.adapter == "sim") {
    if (adapter_flags.sim_config.empty())
      fail(Errc::InvalidArgument, "--sim-config is required with --adapter sim");
    auto config = SimConfig::from_file(adapter_flags.sim_config);
    config.seed = policy_flags.policy.seed ? policy_flags.policy.seed : config.seed;
    auto topology = SimTopology::build(config);
    auto known = topology->vantage_names();
    for (const auto& name : vantage_names) {
      if (std::find(known.begin(), known.end(), name) == known.end())
        fail(Errc::InvalidArgument, "vantage \"" + name + "\" is not in the sim config");
      probers.push_back(std::make_unique<SimProber>(topology, name));
      vantages.emplace_back(name, probers.back().get());
    }
  } else {
    if (vantage_names.size() != 1)
      fail(Errc::InvalidArgument, "the live adapter is a single vantage");
    probers.push_back(std::make_unique<LiveProber>());
    vantages.emplace_back(vantage_names.front(), probers.back().get());
  }

  auto result = map_backbone(targets, vantages, policy_flags.policy, options, known_pops);

  SiteTable sites;
  if (!sites_path.empty()) sites = load_sites_file(sites_path);
  auto doc = export_graph(result.graph, sites);

  auto routers = nlohmann::ordered_json::array();
  for (const auto& router : result.routers) {
    nlohmann::ordered_json row;
    row["addr"] = router.addr.str();
    row["pop"] = router.pop ? nlohmann::ordered_json(*router.pop) : nullptr;
    row["attribution"] = to_string(router.attribution);
    row["evidence"] = router.evidence.size();
    if (router.anomaly) row["anomaly"] = true;
    routers.push_back(std::move(row));
  }
  doc["routers"] = std::move(routers);
  doc["coverage"] = {{"vantages", vantage_names.size()},
                     {"traces", result.traces},
                     {"unreached_targets", result.unreached_targets},
                     {"unreached_pops", result.uncovered_pops}};

  write_text(out_path, doc.dump(2) + "\n");
  for (const auto& pop : result.uncovered_pops)
    std::cerr << "coverage: no vantage reached " << pop << '\n';

  manifest.write(manifest_path(out_path));
  return 0;
}

int cmd_stats(const std::string& dataset_path, const std::string& sites_path, size_t top,
              const std::string& out_dir, Manifest& manifest) {
  auto load = load_dataset(dataset_path);
  auto stats = compute_stats(load.records);

  fs::create_directories(out_dir);
  SiteTable sites;
  if (!sites_path.empty()) sites = load_sites_file(sites_path);

  {
    std::ostringstream out;
    out << "continent,users,percent\n";
    std::vector<std::pair<std::string, uint64_t>> rows(stats.continent_counts.begin(),
                                                       stats.continent_counts.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return std::tie(b.second, a.first) < std::tie(a.second, b.first);
    });
    for (const auto& [name, count] : rows)
      out << name << ',' << count << ',' << stats.continent_percent.at(name) << '\n';
    write_text((fs::path(out_dir) / "continents.csv").string(), out.str());
  }
  {
    std::ostringstream out;
    out << "country,region_code,city,users\n";
    std::vector<std::pair<std::string, uint64_t>> rows(stats.region_counts.begin(),
                                                       stats.region_counts.end());
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
      return std::tie(b.second, a.first) < std::tie(a.second, b.first);
    });
    if (top && rows.size() > top) rows.resize(top);
    for (const auto& [key, count] : rows) {
      auto parts = split_region_key(key);
      out << parts[0] << ',' << parts[1] << ',' << parts[2] << ',' << count << '\n';
    }
    write_text((fs::path(out_dir) / "regions.csv").string(), out.str());
  }
  write_text((fs::path(out_dir) / "pops.csv").string(), pop_table_csv(stats, sites));
  {
    std::ostringstream out;
    out << "country,region_code,city,pops\n";
    for (const auto& [key, pops] : stats.multi_pop_regions) {
      auto parts = split_region_key(key);
      out << parts[0] << ',' << parts[1] << ',' << parts[2] << ',';
      bool first = true;
      for (const auto& pop : pops) {
        if (!first) out << ';';
        out << pop;
        first = false;
      }
      out << '\n';
    }
    write_text((fs::path(out_dir) / "multipop_regions.csv").string(), out.str());
  }

  std::cout << "records " << stats.total << ", homed " << stats.homed << ", regions "
            << stats.region_counts.size() << " (" << stats.distinct_region_codes
            << " region codes), multi-pop regions " << stats.multi_pop_regions.size()
            << '\n';
  manifest.write(manifest_path(out_dir));
  return 0;
}

int cmd_sim_export(const std::string& sim_config_path, const std::string& out_dir,
                   Manifest& manifest) {
  auto config = SimConfig::from_file(sim_config_path);
  auto topology = SimTopology::build(config);

  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "geoip.csv").string(),
             serialize_geoip(topology->geoip_entries()));
  write_text((fs::path(out_dir) / "ground_truth.json").string(),
             topology->ground_truth().dump(2) + "\n");
  write_text((fs::path(out_dir) / "sites.csv").string(), topology->sites_csv());

  std::cout << "pops " << topology->pop_codes().size() << ", users "
            << topology->users().size() << '\n';
  manifest.write(manifest_path(out_dir));
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"IPv6 measurement toolkit for LEO ISP topology mapping"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate probe candidates from a GeoIP feed");
  std::string gen_geoip, gen_out;
  int gen_plen = 56;
  uint64_t gen_cap = kDefaultCandidateCap;
  gen->add_option("--geoip", gen_geoip, "GeoIP feed CSV")->required();
  gen->add_option("--plen", gen_plen, "Delegated prefix length")->capture_default_str();
  gen->add_option("--cap", gen_cap, "Per-allocation candidate cap")->capture_default_str();
  gen->add_option("--out", gen_out, "Candidate file, one address per line")->required();

  // scan
  auto* scan = app.add_subcommand("scan", "Discover active user routers");
  std::string scan_geoip, scan_candidates, scan_out;
  int scan_plen = 56;
  uint64_t scan_cap = kDefaultCandidateCap;
  AdapterFlags scan_adapter;
  PolicyFlags scan_policy;
  scan->add_option("--geoip", scan_geoip, "GeoIP feed CSV")->required();
  scan->add_option("--candidates", scan_candidates, "Probe these addresses instead of enumerating");
  scan->add_option("--plen", scan_plen, "Delegated prefix length")->capture_default_str();
  scan->add_option("--cap", scan_cap, "Per-allocation candidate cap")->capture_default_str();
  scan->add_option("--out", scan_out, "Output dataset")->required();
  add_adapter_flags(scan, scan_adapter);
  add_policy_flags(scan, scan_policy);

  // pops
  auto* pops = app.add_subcommand("pops", "Associate discovered routers with PoPs");
  std::string pops_dataset, pops_out, pops_sites;
  AdapterFlags pops_adapter;
  PolicyFlags pops_policy;
  pops->add_option("--dataset", pops_dataset, "Input dataset")->required();
  pops->add_option("--sites", pops_sites, "Site table CSV for location labels");
  pops->add_option("--out", pops_out, "Output dataset with home pops")->required();
  add_adapter_flags(pops, pops_adapter);
  add_policy_flags(pops, pops_policy);

  // map
  auto* map = app.add_subcommand("map", "Infer the PoP backbone graph");
  std::string map_dataset, map_vantages, map_sites, map_out;
  AdapterFlags map_adapter;
  PolicyFlags map_policy;
  MapOptions map_options;
  map->add_option("--dataset", map_dataset, "Input dataset (targets and known pops)")->required();
  map->add_option("--vantages", map_vantages, "Comma-separated vantage names")->required();
  map->add_option("--sites", map_sites, "Site table CSV with coordinates");
  map->add_option("--min-evidence", map_options.min_evidence, "Traces required per edge")
      ->capture_default_str();
  map->add_option("--cluster-threshold-ms", map_options.cluster_threshold_ms,
                  "Same-pop latency threshold")
      ->capture_default_str();
  map->add_option("--max-ttl", map_options.max_ttl, "Traceroute TTL bound")->capture_default_str();
  map->add_option("--out", map_out, "Backbone graph document")->required();
  add_adapter_flags(map, map_adapter);
  add_policy_flags(map, map_policy);

  // stats
  auto* stats = app.add_subcommand("stats", "Aggregate a dataset into report tables");
  std::string stats_dataset, stats_sites, stats_out;
  size_t stats_top = 10;
  stats->add_option("--dataset", stats_dataset, "Input dataset")->required();
  stats->add_option("--sites", stats_sites, "Site table CSV for location labels");
  stats->add_option("--top", stats_top, "Rows in the regions table, 0 for all")
      ->capture_default_str();
  stats->add_option("--out", stats_out, "Output directory")->required();

  // sim-export
  auto* sim_export =
      app.add_subcommand("sim-export", "Export feed, sites and ground truth from a topology");
  std::string export_config, export_out;
  sim_export->add_option("--sim-config", export_config, "Topology document")->required();
  sim_export->add_option("--out", export_out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  Manifest manifest;
  manifest.flags = args;
  try {
    if (gen->parsed()) {
      manifest.command = "gen";
      manifest.inputs = {gen_geoip};
      return cmd_gen(gen_geoip, gen_plen, gen_cap, gen_out, manifest);
    }
    if (scan->parsed()) {
      manifest.command = "scan";
      manifest.seed = scan_policy.policy.seed;
      manifest.inputs = {scan_geoip};
      if (!scan_candidates.empty()) manifest.inputs.push_back(scan_candidates);
      if (!scan_adapter.sim_config.empty()) manifest.inputs.push_back(scan_adapter.sim_config);
      return cmd_scan(scan_geoip, scan_candidates, scan_adapter, scan_policy, scan_plen,
                      scan_cap, scan_out, manifest);
    }
    if (pops->parsed()) {
      manifest.command = "pops";
      manifest.seed = pops_policy.policy.seed;
      manifest.inputs = {pops_dataset};
      if (!pops_adapter.sim_config.empty()) manifest.inputs.push_back(pops_adapter.sim_config);
      return cmd_pops(pops_dataset, pops_adapter, pops_policy, pops_sites, pops_out, manifest);
    }
    if (map->parsed()) {
      manifest.command = "map";
      manifest.seed = map_policy.policy.seed;
      manifest.inputs = {map_dataset};
      if (!map_adapter.sim_config.empty()) manifest.inputs.push_back(map_adapter.sim_config);
      if (!map_sites.empty()) manifest.inputs.push_back(map_sites);
      return cmd_map(map_dataset, map_vantages, map_adapter, map_policy, map_sites,
                     map_options, map_out, manifest);
    }
    if (stats->parsed()) {
      manifest.command = "stats";
      manifest.inputs = {stats_dataset};
      if (!stats_sites.empty()) manifest.inputs.push_back(stats_sites);
      return cmd_stats(stats_dataset, stats_sites, stats_top, stats_out, manifest);
    }
    if (sim_export->parsed()) {
      manifest.command = "sim-export";
      manifest.inputs = {export_config};
      return cmd_sim_export(export_config, export_out, manifest);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << errc_name(e.code()) << ": " << e.what() << '\n';
    return e.code() == Errc::AdapterUnavailable ? 3 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace leomap
