#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "leomap/addressing.hpp"
#include "leomap/errors.hpp"

namespace leomap {

/// One feed row: an address prefix advertised as belonging to a location.
struct GeoIpEntry {
  Ipv6Prefix prefix;
  std::string country;      // ISO 3166-1 alpha-2, uppercase
  std::string region_code;  // ISO 3166-2, may be empty
  std::string city;         // free text, may be empty

  /// Stable identity used for per-region statistics.
  std::string region_key() const { return country + "/" + region_code + "/" + city; }

  bool operator==(const GeoIpEntry&) const = default;
};

struct GeoFeed {
  std::vector<GeoIpEntry> entries;        // duplicates collapsed, last wins
  std::vector<LineDiagnostic> errors;     // malformed rows
  std::vector<LineDiagnostic> warnings;   // duplicate prefixes
};

/// Parses "prefix,country,region_code,city" rows. Malformed rows are
/// reported, not fatal. Throws Error(EmptyFeed) when no row is valid.
GeoFeed load_geoip(std::istream& in);
GeoFeed load_geoip_file(const std::string& path);

std::string serialize_geoip(const std::vector<GeoIpEntry>& entries);

/// Longest-prefix index over feed entries. Immutable once built.
class GeoIndex {
 public:
  explicit GeoIndex(std::vector<GeoIpEntry> entries);

  /// Longest matching entry, or nullptr when nothing contains `addr`.
  const GeoIpEntry* lookup(const Ipv6Addr& addr) const;

  const std::vector<GeoIpEntry>& entries() const { return entries_; }

 private:
  struct Node {
    int32_t child[2] = {-1, -1};
    int32_t entry = -1;
  };

  std::vector<Node> nodes_;
  std::vector<GeoIpEntry> entries_;
};

enum class Continent {
  NorthAmerica,
  SouthAmerica,
  Europe,
  Asia,
  Oceania,
  Africa,
  Antarctica,
};

const char* to_string(Continent c);

/// Continent for an ISO 3166-1 alpha-2 code, from the embedded table.
std::optional<Continent> continent_of_country(std::string_view alpha2);

/// Throws Error(UnknownCountry) for codes absent from the table.
Continent continent_of(const GeoIpEntry& entry);

}  // namespace leomap
