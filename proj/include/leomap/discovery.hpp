#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "leomap/geoip.hpp"
#include "leomap/probe.hpp"
#include "leomap/ptrmap.hpp"

namespace leomap {

/// One discovered user router. `home_pop` is set exactly when the PTR
/// parsed as a customer record.
struct UserRecord {
  Ipv6Addr addr;
  GeoIpEntry geo;
  std::optional<PopId> home_pop;
  int64_t discovered_at = 0;  // UTC seconds
  std::optional<std::string> ptr_name;

  bool operator==(const UserRecord&) const = default;
};

struct ScanOptions {
  int target_len = 56;
  uint64_t candidate_cap = kDefaultCandidateCap;
  int64_t timestamp = 0;
};

struct ScanReport {
  struct Allocation {
    Ipv6Prefix prefix;
    uint64_t candidates = 0;
    uint64_t alive = 0;
    std::string error;  // set when the allocation was skipped
  };
  std::vector<Allocation> allocations;
  uint64_t candidates = 0;
  uint64_t alive = 0;
};

/// Enumerates candidates for every allocation and keeps the ones that
/// answer echo. Oversized allocations are reported and skipped, never fatal.
std::vector<UserRecord> scan_allocations(const std::vector<GeoIpEntry>& entries,
                                         Prober& prober, const ProbePolicy& policy,
                                         const ScanOptions& options = {},
                                         ScanReport* report = nullptr,
                                         const Blocklist* blocklist = nullptr);

struct AssociationReport {
  uint64_t customer = 0;
  uint64_t no_ptr = 0;
  uint64_t foreign_ptr = 0;  // resolved but not a customer record
};

/// Resolves the PTR of every record and fills home_pop from customer names.
AssociationReport associate_pops(std::vector<UserRecord>& records, Prober& prober,
                                 const ProbePolicy& policy);

struct PopServiceStats {
  PopId pop;
  uint64_t user_count = 0;
  std::set<std::string> regions;
};

struct DiscoveryStats {
  uint64_t total = 0;
  uint64_t homed = 0;
  std::map<std::string, uint64_t> continent_counts;
  std::map<std::string, int> continent_percent;  // round half away from zero
  std::map<std::string, uint64_t> region_counts;
  uint64_t distinct_region_codes = 0;
  std::map<std::string, PopServiceStats> pop_stats;               // by pop code
  std::map<std::string, std::set<std::string>> multi_pop_regions;  // >= 2 pops
};

DiscoveryStats compute_stats(const std::vector<UserRecord>& records);

/// Rounded percentage per key; empty input yields no entries.
std::map<std::string, int> percentages(const std::map<std::string, uint64_t>& counts);

inline constexpr const char* kDatasetHeader = "#leomap-users v1";

/// Line-oriented dataset, one record per line under a version header.
void save_dataset(const std::string& path, const std::vector<UserRecord>& records,
                  bool append = false);

struct DatasetLoad {
  std::vector<UserRecord> records;  // deduplicated by address, last wins
  std::vector<LineDiagnostic> corrupt_lines;
};

/// Throws Error(SchemaMismatch) when the header is missing or has another
/// version. Corrupt lines are skipped and reported.
DatasetLoad load_dataset(const std::string& path);

}  // namespace leomap
