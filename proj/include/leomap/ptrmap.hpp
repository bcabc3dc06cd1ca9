#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "leomap/addressing.hpp"

namespace leomap {

/// Parsed PoP code: a site label of at least four letters plus a decimal
/// index, e.g. "sttlwax1" = ("sttlwax", 1).
struct PopId {
  std::string code;
  std::string site;
  int index = 0;

  bool operator==(const PopId&) const = default;
  auto operator<=>(const PopId&) const = default;
};

/// Throws Error(MalformedPopCode). Input is lowercased first.
PopId parse_pop_code(std::string_view code);
std::optional<PopId> try_parse_pop_code(std::string_view code);

struct PtrRecord {
  Ipv6Addr owner;
  std::string name;
};

struct PtrClassification {
  enum class Kind { Customer, PopHost, NotStarlink };

  Kind kind = Kind::NotStarlink;
  std::optional<PopId> pop;  // Customer and PopHost
  std::string label;         // PopHost only

  bool operator==(const PtrClassification&) const = default;
};

/// Nibble-reversed reverse-lookup name, "<32 nibbles>.ip6.arpa".
std::string reverse_name(const Ipv6Addr& addr);

/// Total classifier for the "<label>.<pop>.pop.starlinkisp.net" zone.
/// "customer" labels map to Customer, any other label to PopHost, and
/// everything else (including malformed pop codes) to NotStarlink.
/// Case-insensitive; a single trailing dot is tolerated.
PtrClassification parse_ptr(std::string_view name);

std::string customer_ptr_name(const PopId& pop);
std::string pop_host_ptr_name(std::string_view label, const PopId& pop);

}  // namespace leomap
