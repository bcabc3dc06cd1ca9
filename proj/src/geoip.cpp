#include "leomap/geoip.hpp"

#include <cctype>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>

#include "leomap/util.hpp"

namespace leomap {

namespace {

bool valid_country(std::string_view code) {
  return code.size() == 2 && std::isalpha(static_cast<unsigned char>(code[0])) &&
         std::isalpha(static_cast<unsigned char>(code[1]));
}

std::string upper2(std::string_view code) {
  std::string out(code);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

GeoFeed load_geoip(std::istream& in) {
  GeoFeed feed;
  std::map<Ipv6Prefix, size_t> seen;  // prefix -> index into feed.entries
  std::string line;
  size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;

    auto fields = detail::split(line, ',');
    // tolerate one trailing comma
    if (fields.size() == 5 && fields[4].empty()) fields.pop_back();
    if (fields.size() != 4) {
      feed.errors.push_back({line_no, "expected 4 comma-separated fields"});
      continue;
    }

    auto prefix = Ipv6Prefix::parse(detail::trim(fields[0]));
    if (!prefix) {
      feed.errors.push_back({line_no, "bad prefix \"" + fields[0] + "\""});
      continue;
    }
    std::string country(detail::trim(fields[1]));
    if (!valid_country(country)) {
      feed.errors.push_back({line_no, "bad country code \"" + fields[1] + "\""});
      continue;
    }

    GeoIpEntry entry{*prefix, upper2(country), std::string(detail::trim(fields[2])),
                     std::string(detail::trim(fields[3]))};
    auto [it, inserted] = seen.try_emplace(*prefix, feed.entries.size());
    if (inserted) {
      feed.entries.push_back(std::move(entry));
    } else {
      feed.warnings.push_back({line_no, "duplicate prefix " + prefix->str() + ", keeping last"});
      feed.entries[it->second] = std::move(entry);
    }
  }

  if (feed.entries.empty())
    fail(Errc::EmptyFeed, "no valid rows in GeoIP feed (" +
                              std::to_string(feed.errors.size()) + " malformed)");
  return feed;
}

GeoFeed load_geoip_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::InvalidArgument, "cannot open GeoIP feed " + path);
  return load_geoip(in);
}

std::string serialize_geoip(const std::vector<GeoIpEntry>& entries) {
  std::ostringstream out;
  for (const auto& e : entries)
    out << e.prefix.str() << ',' << e.country << ',' << e.region_code << ',' << e.city << '\n';
  return out.str();
}

GeoIndex::GeoIndex(std::vector<GeoIpEntry> entries) : entries_(std::move(entries)) {
  nodes_.emplace_back();
  for (size_t i = 0; i < entries_.size(); ++i) {
    const auto& prefix = entries_[i].prefix;
    int32_t node = 0;
    for (int pos = 1; pos <= prefix.length; ++pos) {
      int b = prefix.base.bit(pos) ? 1 : 0;
      if (nodes_[node].child[b] < 0) {
        nodes_[node].child[b] = static_cast<int32_t>(nodes_.size());
        nodes_.emplace_back();
      }
      node = nodes_[node].child[b];
    }
    nodes_[node].entry = static_cast<int32_t>(i);
  }
}

const GeoIpEntry* GeoIndex::lookup(const Ipv6Addr& addr) const {
  const GeoIpEntry* best = nullptr;
  int32_t node = 0;
  for (int pos = 1; pos <= 128; ++pos) {
    if (nodes_[node].entry >= 0) best = &entries_[nodes_[node].entry];
    int b = addr.bit(pos) ? 1 : 0;
    node = nodes_[node].child[b];
    if (node < 0) return best;
  }
  if (nodes_[node].entry >= 0) best = &entries_[nodes_[node].entry];
  return best;
}

}  // namespace leomap
