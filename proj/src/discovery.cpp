#include "leomap/discovery.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "leomap/util.hpp"

namespace leomap {

std::vector<UserRecord> scan_allocations(const std::vector<GeoIpEntry>& entries,
                                         Prober& prober, const ProbePolicy& policy,
                                         const ScanOptions& options, ScanReport* report,
                                         const Blocklist* blocklist) {
  if (entries.empty()) fail(Errc::InvalidArgument, "no allocations to scan");

  std::vector<UserRecord> records;
  for (const auto& entry : entries) {
    ScanReport::Allocation alloc;
    alloc.prefix = entry.prefix;
    try {
      CandidateStream stream(entry.prefix, options.target_len, options.candidate_cap);
      std::vector<Ipv6Addr> targets(stream.begin(), stream.end());
      alloc.candidates = stream.size();

      auto results = run_batch(
          targets, [&](const Ipv6Addr& t) { return prober.echo(t, policy); }, policy,
          blocklist);
      for (const auto& item : results) {
        if (!item.ok() || *item.value != EchoStatus::Alive) continue;
        ++alloc.alive;
        records.push_back(
            {item.target, entry, std::nullopt, options.timestamp, std::nullopt});
      }
    } catch (const Error& e) {
      if (e.code() != Errc::PrefixTooShort && e.code() != Errc::InvalidArgument) throw;
      alloc.error = std::string(errc_name(e.code())) + ": " + e.what();
    }
    if (report) {
      report->candidates += alloc.candidates;
      report->alive += alloc.alive;
      report->allocations.push_back(std::move(alloc));
    }
  }
  return records;
}

AssociationReport associate_pops(std::vector<UserRecord>& records, Prober& prober,
                                 const ProbePolicy& policy) {
  AssociationReport report;
  std::vector<Ipv6Addr> targets;
  targets.reserve(records.size());
  for (const auto& record : records) targets.push_back(record.addr);

  auto results = run_batch(
      targets, [&](const Ipv6Addr& t) { return prober.resolve_ptr(t, policy); }, policy);

  for (size_t i = 0; i < records.size(); ++i) {
    auto& record = records[i];
    record.home_pop.reset();
    record.ptr_name.reset();
    if (!results[i].ok() || !results[i].value->name) {
      ++report.no_ptr;
      continue;
    }
    record.ptr_name = results[i].value->name;
    auto parsed = parse_ptr(*record.ptr_name);
    if (parsed.kind == PtrClassification::Kind::Customer) {
      record.home_pop = parsed.pop;
      ++report.customer;
    } else {
      ++report.foreign_ptr;
    }
  }
  return report;
}

std::map<std::string, int> percentages(const std::map<std::string, uint64_t>& counts) {
  uint64_t total = 0;
  for (const auto& [_, count] : counts) total += count;
  std::map<std::string, int> out;
  if (total == 0) return out;
  for (const auto& [key, count] : counts)
    out[key] = static_cast<int>(
        std::llround(100.0 * static_cast<double>(count) / static_cast<double>(total)));
  return out;
}

DiscoveryStats compute_stats(const std::vector<UserRecord>& records) {
  DiscoveryStats stats;
  stats.total = records.size();

  std::set<std::string> region_codes;
  std::map<std::string, std::set<std::string>> pops_per_region;

  for (const auto& record : records) {
    auto continent = continent_of_country(record.geo.country);
    stats.continent_counts[continent ? to_string(*continent) : "Unknown"] += 1;

    auto region = record.geo.region_key();
    stats.region_counts[region] += 1;
    region_codes.insert(record.geo.country + "/" + record.geo.region_code);

    if (record.home_pop) {
      ++stats.homed;
      auto& pop = stats.pop_stats[record.home_pop->code];
      pop.pop = *record.home_pop;
      pop.user_count += 1;
      pop.regions.insert(region);
      pops_per_region[region].insert(record.home_pop->code);
    }
  }

  stats.distinct_region_codes = region_codes.size();
  stats.continent_percent = percentages(stats.continent_counts);
  for (auto& [region, pops] : pops_per_region)
    if (pops.size() >= 2) stats.multi_pop_regions.emplace(region, std::move(pops));
  return stats;
}

namespace {

// Tab-separated record; "-" marks absent optionals.
constexpr char kFieldSep = '\t';
constexpr const char* kAbsent = "-";

std::string render_record(const UserRecord& r) {
  std::string line = r.addr.str();
  line += kFieldSep;
  line += r.geo.prefix.str();
  line += kFieldSep;
  line += r.geo.country;
  line += kFieldSep;
  line += r.geo.region_code;
  line += kFieldSep;
  line += r.geo.city;
  line += kFieldSep;
  line += r.home_pop ? r.home_pop->code : kAbsent;
  line += kFieldSep;
  line += std::to_string(r.discovered_at);
  line += kFieldSep;
  line += r.ptr_name ? *r.ptr_name : kAbsent;
  return line;
}

std::optional<std::string> parse_record(const std::string& line, UserRecord& out) {
  auto fields = detail::split(line, kFieldSep);
  if (fields.size() != 8) return "expected 8 tab-separated fields";

  auto addr = Ipv6Addr::parse(fields[0]);
  if (!addr) return "bad address \"" + fields[0] + "\"";
  auto prefix = Ipv6Prefix::parse(fields[1]);
  if (!prefix) return "bad prefix \"" + fields[1] + "\"";
  if (!prefix->contains(*addr)) return "address outside its prefix";
  if (classify(*addr, {}, {}) != AddressRole::UserRouter)
    return "address does not match the user-router pattern";

  out.addr = *addr;
  out.geo = {*prefix, fields[2], fields[3], fields[4]};

  int64_t ts = 0;
  auto [ptr, ec] = std::from_chars(fields[6].data(), fields[6].data() + fields[6].size(), ts);
  if (ec != std::errc{} || ptr != fields[6].data() + fields[6].size())
    return "bad timestamp \"" + fields[6] + "\"";
  out.discovered_at = ts;

  out.ptr_name = fields[7] == kAbsent ? std::nullopt : std::make_optional(fields[7]);
  if (fields[5] == kAbsent) {
    out.home_pop.reset();
    if (out.ptr_name &&
        parse_ptr(*out.ptr_name).kind == PtrClassification::Kind::Customer)
      return "customer ptr without home pop";
  } else {
    auto pop = try_parse_pop_code(fields[5]);
    if (!pop) return "bad pop code \"" + fields[5] + "\"";
    if (!out.ptr_name || parse_ptr(*out.ptr_name) !=
                             PtrClassification{PtrClassification::Kind::Customer, pop, {}})
      return "home pop not backed by a customer ptr";
    out.home_pop = std::move(pop);
  }
  return std::nullopt;
}

}  // namespace

void save_dataset(const std::string& path, const std::vector<UserRecord>& records,
                  bool append) {
  bool write_header = true;
  if (append) {
    std::ifstream existing(path);
    write_header = !existing.good();
  }
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) fail(Errc::InvalidArgument, "cannot write dataset " + path);
  if (write_header) out << kDatasetHeader << '\n';
  for (const auto& record : records) {
    auto line = render_record(record);
    if (line.find('\n') != std::string::npos)
      fail(Errc::InvalidArgument, "record field contains a newline");
    out << line << '\n';
  }
}

DatasetLoad load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::InvalidArgument, "cannot open dataset " + path);

  std::string line;
  if (!std::getline(in, line)) fail(Errc::SchemaMismatch, path + ": empty dataset");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kDatasetHeader)
    fail(Errc::SchemaMismatch,
         path + ": expected header \"" + kDatasetHeader + "\", got \"" + line + "\"");

  DatasetLoad load;
  std::map<Ipv6Addr, size_t> by_addr;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    UserRecord record;
    if (auto error = parse_record(line, record)) {
      load.corrupt_lines.push_back({line_no, *error});
      continue;
    }
    auto [it, inserted] = by_addr.try_emplace(record.addr, load.records.size());
    if (inserted)
      load.records.push_back(std::move(record));
    else
      load.records[it->second] = std::move(record);  // re-scan overwrites by address
  }
  return load;
}

}  // namespace leomap
