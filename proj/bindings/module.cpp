#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "leomap/backbone.hpp"
#include "leomap/cli.hpp"
#include "leomap/discovery.hpp"
#include "leomap/geoip.hpp"
#include "leomap/ptrmap.hpp"
#include "leomap/simnet.hpp"

namespace py = pybind11;
using namespace leomap;

namespace {

Ipv6Addr addr_arg(const std::string& text) { return Ipv6Addr::must_parse(text); }
Ipv6Prefix prefix_arg(const std::string& text) { return Ipv6Prefix::must_parse(text); }

std::vector<Ipv6Addr> addr_list(const std::vector<std::string>& texts) {
  std::vector<Ipv6Addr> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(addr_arg(t));
  return out;
}

py::dict stats_dict(const DiscoveryStats& stats) {
  py::dict out;
  out["total"] = stats.total;
  out["homed"] = stats.homed;
  out["continent_counts"] = stats.continent_counts;
  out["continent_percent"] = stats.continent_percent;
  out["region_counts"] = stats.region_counts;
  out["distinct_region_codes"] = stats.distinct_region_codes;
  py::dict pops;
  for (const auto& [code, pop] : stats.pop_stats) {
    py::dict row;
    row["users"] = pop.user_count;
    row["regions"] = pop.regions;
    pops[py::str(code)] = row;
  }
  out["pop_stats"] = pops;
  out["multi_pop_regions"] = stats.multi_pop_regions;
  return out;
}

}  // namespace

PYBIND11_MODULE(_leomap, m) {
  m.doc() = "IPv6 measurement toolkit: candidate generation, PoP discovery and "
            "backbone mapping, with a simulated ground-truth network";

  py::register_exception<Error>(m, "LeomapError");

  py::class_<Ipv6Addr>(m, "Ipv6Addr")
      .def(py::init(&addr_arg))
      .def("__str__", &Ipv6Addr::str)
      .def("__repr__", [](const Ipv6Addr& a) { return "Ipv6Addr('" + a.str() + "')"; })
      .def("__eq__", [](const Ipv6Addr& a, const Ipv6Addr& b) { return a == b; })
      .def("__lt__", [](const Ipv6Addr& a, const Ipv6Addr& b) { return a < b; })
      .def("__hash__", [](const Ipv6Addr& a) { return Ipv6AddrHash{}(a); });

  py::class_<Ipv6Prefix>(m, "Ipv6Prefix")
      .def(py::init(&prefix_arg))
      .def_property_readonly("length", [](const Ipv6Prefix& p) { return p.length; })
      .def("contains", [](const Ipv6Prefix& p, const std::string& a) {
        return p.contains(addr_arg(a));
      })
      .def("__str__", &Ipv6Prefix::str)
      .def("__repr__", [](const Ipv6Prefix& p) { return "Ipv6Prefix('" + p.str() + "')"; })
      .def("__eq__", [](const Ipv6Prefix& a, const Ipv6Prefix& b) { return a == b; });

  m.def("user_router_address",
        [](const std::string& prefix) { return user_router_address(prefix_arg(prefix)).str(); },
        py::arg("prefix56"));

  m.def("generate_candidates",
        [](const std::string& alloc, int target_len, uint64_t cap) {
          CandidateStream stream(prefix_arg(alloc), target_len, cap);
          std::vector<std::string> out;
          out.reserve(stream.size());
          for (const auto& addr : stream) out.push_back(addr.str());
          return out;
        },
        py::arg("alloc"), py::arg("target_len") = 56, py::arg("cap") = kDefaultCandidateCap);

  m.def("candidate_count", [](const std::string& alloc, int target_len, uint64_t cap) {
          return CandidateStream(prefix_arg(alloc), target_len, cap).size();
        },
        py::arg("alloc"), py::arg("target_len") = 56, py::arg("cap") = kDefaultCandidateCap);

  m.def("classify",
        [](const std::string& addr) { return std::string(to_string(classify(addr_arg(addr)))); },
        py::arg("addr"), "Role of an address under the default gateway/PoP patterns");

  m.def("gateway_v6_to_v4",
        [](const std::string& addr) { return gateway_v6_to_v4(addr_arg(addr)).str(); });
  m.def("gateway_v4_to_v6", [](const std::string& addr) {
    return gateway_v4_to_v6(Ipv4Addr::must_parse(addr)).str();
  });

  m.def("reverse_name", [](const std::string& addr) { return reverse_name(addr_arg(addr)); });

  m.def("parse_ptr", [](const std::string& name) {
    auto parsed = parse_ptr(name);
    py::dict out;
    switch (parsed.kind) {
      case PtrClassification::Kind::Customer: out["kind"] = "customer"; break;
      case PtrClassification::Kind::PopHost: out["kind"] = "pop-host"; break;
      case PtrClassification::Kind::NotStarlink: out["kind"] = "not-starlink"; break;
    }
    if (parsed.pop) out["pop"] = parsed.pop->code;
    if (parsed.kind == PtrClassification::Kind::PopHost) out["label"] = parsed.label;
    return out;
  });

  m.def("parse_pop_code", [](const std::string& code) {
    auto pop = parse_pop_code(code);
    return py::make_tuple(pop.site, pop.index);
  });

  m.def("continent_of_country", [](const std::string& alpha2) -> std::optional<std::string> {
    auto c = continent_of_country(alpha2);
    if (!c) return std::nullopt;
    return std::string(to_string(*c));
  });

  py::class_<GeoIndex>(m, "GeoIndex")
      .def(py::init([](const std::string& csv) {
        std::istringstream in(csv);
        return GeoIndex(load_geoip(in).entries);
      }))
      .def("lookup", [](const GeoIndex& index, const std::string& addr) -> py::object {
        const auto* entry = index.lookup(addr_arg(addr));
        if (!entry) return py::none();
        return py::make_tuple(entry->prefix.str(), entry->country, entry->region_code,
                              entry->city);
      });

  py::class_<ProbePolicy>(m, "ProbePolicy")
      .def(py::init<>())
      .def_readwrite("max_in_flight", &ProbePolicy::max_in_flight)
      .def_readwrite("rate_per_second", &ProbePolicy::rate_per_second)
      .def_readwrite("timeout_ms", &ProbePolicy::timeout_ms)
      .def_readwrite("retries", &ProbePolicy::retries)
      .def_readwrite("echo_attempts", &ProbePolicy::echo_attempts)
      .def_readwrite("randomize_order", &ProbePolicy::randomize_order)
      .def_readwrite("seed", &ProbePolicy::seed);

  py::class_<SimTopology, std::shared_ptr<SimTopology>> topo(m, "SimTopology");

  m.def("build_sim", [](const std::string& config_json) {
    return std::const_pointer_cast<SimTopology>(
        SimTopology::build(SimConfig::from_json(nlohmann::json::parse(config_json))));
  });
  m.def("build_sim_file", [](const std::string& path) {
    return std::const_pointer_cast<SimTopology>(SimTopology::build(SimConfig::from_file(path)));
  });

  topo.def("ground_truth",
           [](const SimTopology& t) { return t.ground_truth().dump(2); })
      .def("geoip_csv", [](const SimTopology& t) { return serialize_geoip(t.geoip_entries()); })
      .def("sites_csv", &SimTopology::sites_csv)
      .def("pop_codes", &SimTopology::pop_codes)
      .def("vantage_names", &SimTopology::vantage_names)
      .def("pop_distance_ms", &SimTopology::pop_distance_ms);

  py::class_<SimProber>(m, "SimProber")
      .def(py::init([](std::shared_ptr<SimTopology> topology, const std::string& vantage) {
             return SimProber(topology, vantage);
           }),
           py::arg("topology"), py::arg("vantage") = std::string{})
      .def("echo",
           [](SimProber& p, const std::string& target, const ProbePolicy& policy) {
             return p.echo(addr_arg(target), policy) == EchoStatus::Alive;
           },
           py::arg("target"), py::arg("policy") = ProbePolicy{})
      .def("resolve_ptr",
           [](SimProber& p, const std::string& addr, const ProbePolicy& policy) {
             return p.resolve_ptr(addr_arg(addr), policy).name;
           },
           py::arg("addr"), py::arg("policy") = ProbePolicy{})
      .def("traceroute",
           [](SimProber& p, const std::string& target, int max_ttl, const ProbePolicy& policy) {
             auto trace = p.traceroute(addr_arg(target), max_ttl, policy);
             py::list hops;
             for (const auto& hop : trace.hops) {
               py::dict row;
               row["ttl"] = hop.ttl;
               row["responder"] =
                   hop.responder ? py::object(py::str(hop.responder->str())) : py::none();
               row["rtt_ms"] = hop.rtt_samples;
               hops.append(row);
             }
             py::dict out;
             out["target"] = trace.target.str();
             out["reached"] = trace.reached;
             out["hops"] = hops;
             return out;
           },
           py::arg("target"), py::arg("max_ttl") = 32, py::arg("policy") = ProbePolicy{});

  m.def("extract_backbone_router",
        [](const py::dict& trace) -> std::optional<std::string> {
          TracerouteResult result;
          result.target = addr_arg(trace["target"].cast<std::string>());
          result.reached = trace["reached"].cast<bool>();
          for (const auto& hop : trace["hops"].cast<py::list>()) {
            auto row = hop.cast<py::dict>();
            HopObservation observation;
            observation.ttl = row["ttl"].cast<int>();
            if (!row["responder"].is_none())
              observation.responder = addr_arg(row["responder"].cast<std::string>());
            observation.rtt_samples = row["rtt_ms"].cast<std::vector<double>>();
            result.hops.push_back(std::move(observation));
          }
          auto router = extract_backbone_router(result);
          if (!router) return std::nullopt;
          return router->str();
        },
        "Third-to-last responder of a reached trace");

  m.def("scan_sim",
        [](std::shared_ptr<SimTopology> topology, const ProbePolicy& policy, int64_t timestamp) {
          SimProber prober(topology);
          ScanOptions options;
          options.timestamp = timestamp;
          auto records = scan_allocations(topology->geoip_entries(), prober, policy, options);
          std::vector<std::string> out;
          out.reserve(records.size());
          for (const auto& r : records) out.push_back(r.addr.str());
          return out;
        },
        py::arg("topology"), py::arg("policy") = ProbePolicy{}, py::arg("timestamp") = 0,
        "Run the discovery scan against a simulated topology; returns alive addresses");

  m.def("map_backbone_sim",
        [](std::shared_ptr<SimTopology> topology, const std::vector<std::string>& vantages,
           const std::vector<std::string>& targets, const ProbePolicy& policy,
           int min_evidence, double cluster_threshold_ms) {
          std::vector<std::unique_ptr<SimProber>> probers;
          std::vector<std::pair<std::string, Prober*>> handles;
          for (const auto& name : vantages) {
            probers.push_back(std::make_unique<SimProber>(topology, name));
            handles.emplace_back(name, probers.back().get());
          }
          MapOptions options;
          options.min_evidence = min_evidence;
          options.cluster_threshold_ms = cluster_threshold_ms;
          auto result = map_backbone(addr_list(targets), handles, policy, options);
          return export_graph(result.graph, {}).dump(2);
        },
        py::arg("topology"), py::arg("vantages"), py::arg("targets"),
        py::arg("policy") = ProbePolicy{}, py::arg("min_evidence") = 2,
        py::arg("cluster_threshold_ms") = 5.0,
        "Full backbone inference over a simulated topology; returns the graph document");

  m.def("compute_stats_csvless",
        [](const std::string& dataset_path) {
          auto load = load_dataset(dataset_path);
          return stats_dict(compute_stats(load.records));
        },
        py::arg("dataset_path"), "Aggregate a dataset file into statistics");

  m.def("run_cli", &run_cli, py::arg("args"),
        "Invoke the command line entry point; returns its exit code");

  m.attr("DATASET_HEADER") = kDatasetHeader;
}
