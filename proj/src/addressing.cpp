#include "leomap/addressing.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

#include "leomap/util.hpp"

namespace leomap {

namespace {

// Masks keeping the first `len` of 128 bits.
struct Mask128 {
  uint64_t hi;
  uint64_t lo;
};

Mask128 prefix_mask(int len) {
  auto top = [](int n) -> uint64_t {
    if (n <= 0) return 0;
    if (n >= 64) return ~uint64_t{0};
    return ~uint64_t{0} << (64 - n);
  };
  return {top(len), top(len - 64)};
}

std::optional<uint16_t> parse_hex_group(std::string_view text) {
  if (text.empty() || text.size() > 4) return std::nullopt;
  uint16_t value = 0;
  for (char c : text) {
    int digit;
    if (c >= '0' && c <= '9')
      digit = c - '0';
    else if (c >= 'a' && c <= 'f')
      digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      digit = c - 'A' + 10;
    else
      return std::nullopt;
    value = static_cast<uint16_t>(value << 4 | digit);
  }
  return value;
}

}  // namespace

std::optional<Ipv6Addr> Ipv6Addr::parse(std::string_view text) {
  if (text.empty() || text.size() > 45) return std::nullopt;

  // Split on "::" if present; at most one occurrence.
  auto gap = text.find("::");
  if (gap != std::string_view::npos && text.find("::", gap + 1) != std::string_view::npos)
    return std::nullopt;

  std::string_view head = gap == std::string_view::npos ? text : text.substr(0, gap);
  std::string_view tail = gap == std::string_view::npos ? std::string_view{} : text.substr(gap + 2);

  auto parse_side = [](std::string_view side, std::vector<uint16_t>& groups,
                       bool allow_v4_tail) -> bool {
    if (side.empty()) return true;
    size_t start = 0;
    while (true) {
      size_t colon = side.find(':', start);
      std::string_view part =
          colon == std::string_view::npos ? side.substr(start) : side.substr(start, colon - start);
      bool last = colon == std::string_view::npos;
      if (last && allow_v4_tail && part.find('.') != std::string_view::npos) {
        auto v4 = Ipv4Addr::parse(part);
        if (!v4) return false;
        groups.push_back(static_cast<uint16_t>(v4->value >> 16));
        groups.push_back(static_cast<uint16_t>(v4->value & 0xffff));
      } else {
        auto group = parse_hex_group(part);
        if (!group) return false;
        groups.push_back(*group);
      }
      if (last) break;
      start = colon + 1;
    }
    return true;
  };

  std::vector<uint16_t> front, back;
  if (!parse_side(head, front, gap == std::string_view::npos)) return std::nullopt;
  if (gap != std::string_view::npos && !parse_side(tail, back, true)) return std::nullopt;

  size_t total = front.size() + back.size();
  if (gap == std::string_view::npos) {
    if (total != 8) return std::nullopt;
  } else if (total > 7) {
    return std::nullopt;  // "::" must stand for at least one zero group
  }

  std::array<uint16_t, 8> groups{};
  for (size_t i = 0; i < front.size(); ++i) groups[i] = front[i];
  for (size_t i = 0; i < back.size(); ++i) groups[8 - back.size() + i] = back[i];

  Ipv6Addr addr;
  for (int i = 0; i < 4; ++i) addr.hi = addr.hi << 16 | groups[i];
  for (int i = 4; i < 8; ++i) addr.lo = addr.lo << 16 | groups[i];
  return addr;
}

Ipv6Addr Ipv6Addr::must_parse(std::string_view text) {
  auto addr = parse(text);
  if (!addr) fail(Errc::InvalidArgument, "bad IPv6 address: " + std::string(text));
  return *addr;
}

Ipv6Addr Ipv6Addr::from_bytes(const std::array<uint8_t, 16>& bytes) {
  Ipv6Addr addr;
  for (int i = 0; i < 8; ++i) addr.hi = addr.hi << 8 | bytes[i];
  for (int i = 8; i < 16; ++i) addr.lo = addr.lo << 8 | bytes[i];
  return addr;
}

std::array<uint8_t, 16> Ipv6Addr::to_bytes() const {
  std::array<uint8_t, 16> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<uint8_t>(hi >> (8 * (7 - i)));
  for (int i = 0; i < 8; ++i) bytes[8 + i] = static_cast<uint8_t>(lo >> (8 * (7 - i)));
  return bytes;
}

std::string Ipv6Addr::str() const {
  std::array<uint16_t, 8> groups;
  for (int i = 0; i < 8; ++i) groups[i] = group(i);

  // Longest run of two or more zero groups, leftmost on ties.
  int best_start = -1, best_len = 0;
  for (int i = 0; i < 8;) {
    if (groups[i] != 0) {
      ++i;
      continue;
    }
    int j = i;
    while (j < 8 && groups[j] == 0) ++j;
    if (j - i > best_len) {
      best_start = i;
      best_len = j - i;
    }
    i = j;
  }
  if (best_len < 2) best_start = -1;

  std::string out;
  char buf[8];
  for (int i = 0; i < 8;) {
    if (i == best_start) {
      out += "::";
      i += best_len;
      continue;
    }
    if (!out.empty() && out.back() != ':') out += ':';
    std::snprintf(buf, sizeof buf, "%x", groups[i]);
    out += buf;
    ++i;
  }
  return out;
}

bool Ipv6Addr::bit(int pos) const {
  if (pos <= 64) return hi >> (64 - pos) & 1;
  return lo >> (128 - pos) & 1;
}

uint16_t Ipv6Addr::group(int idx) const {
  if (idx < 4) return static_cast<uint16_t>(hi >> (16 * (3 - idx)));
  return static_cast<uint16_t>(lo >> (16 * (7 - idx)));
}

std::optional<Ipv6Prefix> Ipv6Prefix::parse(std::string_view text) {
  auto slash = text.rfind('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = Ipv6Addr::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int length = -1;
  auto digits = text.substr(slash + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), length);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  if (length < 0 || length > 128) return std::nullopt;
  auto mask = prefix_mask(length);
  if ((addr->hi & ~mask.hi) != 0 || (addr->lo & ~mask.lo) != 0) return std::nullopt;
  return Ipv6Prefix{*addr, length};
}

Ipv6Prefix Ipv6Prefix::must_parse(std::string_view text) {
  auto prefix = parse(text);
  if (!prefix) fail(Errc::InvalidArgument, "bad IPv6 prefix: " + std::string(text));
  return *prefix;
}

Ipv6Prefix Ipv6Prefix::truncating(const Ipv6Addr& addr, int length) {
  if (length < 0 || length > 128) fail(Errc::InvalidArgument, "bad prefix length");
  auto mask = prefix_mask(length);
  return Ipv6Prefix{{addr.hi & mask.hi, addr.lo & mask.lo}, length};
}

bool Ipv6Prefix::contains(const Ipv6Addr& addr) const {
  auto mask = prefix_mask(length);
  return (addr.hi & mask.hi) == base.hi && (addr.lo & mask.lo) == base.lo;
}

std::string Ipv6Prefix::str() const {
  return base.str() + "/" + std::to_string(length);
}

std::optional<Ipv4Addr> Ipv4Addr::parse(std::string_view text) {
  auto parts = detail::split(text, '.');
  if (parts.size() != 4) return std::nullopt;
  uint32_t value = 0;
  for (const auto& part : parts) {
    if (part.empty() || part.size() > 3) return std::nullopt;
    int octet = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), octet);
    if (ec != std::errc{} || ptr != part.data() + part.size()) return std::nullopt;
    if (octet < 0 || octet > 255) return std::nullopt;
    if (part.size() > 1 && part[0] == '0') return std::nullopt;
    value = value << 8 | static_cast<uint32_t>(octet);
  }
  return Ipv4Addr{value};
}

Ipv4Addr Ipv4Addr::must_parse(std::string_view text) {
  auto addr = parse(text);
  if (!addr) fail(Errc::InvalidArgument, "bad IPv4 address: " + std::string(text));
  return *addr;
}

std::string Ipv4Addr::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", octet(0), octet(1), octet(2), octet(3));
  return buf;
}

const char* to_string(AddressRole role) {
  switch (role) {
    case AddressRole::UserRouter: return "user-router";
    case AddressRole::Gateway: return "gateway";
    case AddressRole::PopInfrastructure: return "pop-infrastructure";
    case AddressRole::Unknown: return "unknown";
  }
  return "unknown";
}

std::vector<Ipv6Prefix> default_pop_blocks() {
  return {Ipv6Prefix::must_parse("2620:134:b0ff::/116"),
          Ipv6Prefix::must_parse("2620:134:b004::/116")};
}

Ipv6Addr user_router_address(const Ipv6Prefix& prefix56) {
  if (prefix56.length != 56)
    fail(Errc::WrongPrefixLength,
         "user router derivation needs a /56, got " + prefix56.str());
  return Ipv6Addr{prefix56.base.hi, prefix56.base.lo | 1};
}

CandidateStream::CandidateStream(const Ipv6Prefix& alloc, int target_len, uint64_t cap)
    : alloc_(alloc), target_len_(target_len) {
  if (target_len < alloc.length || target_len > 64)
    fail(Errc::InvalidArgument,
         "target length must lie in [" + std::to_string(alloc.length) + ", 64]");
  int free_bits = target_len - alloc.length;
  if (free_bits >= 64 || (uint64_t{1} << free_bits) >= cap)
    fail(Errc::PrefixTooShort,
         alloc.str() + " expands to 2^" + std::to_string(free_bits) +
             " sub-prefixes, at or over the cap of " + std::to_string(cap) +
             "; chunk the allocation first");
  count_ = uint64_t{1} << free_bits;
}

Ipv6Addr CandidateStream::at(uint64_t index) const {
  // target_len <= 64, so the enumerated bits all live in `hi`.
  uint64_t hi = alloc_.base.hi | index << (64 - target_len_);
  return Ipv6Addr{hi, alloc_.base.lo | 1};
}

namespace {

bool matches_gateway(const Ipv6Addr& addr, const GatewayCodecConfig& config) {
  if (!config.v6_site_prefix.contains(addr)) return false;
  uint16_t segment = addr.group(3);
  if (segment < kGatewaySegmentMin || segment > kGatewaySegmentMax) return false;
  if (addr.lo >> 12 != 0) return false;  // bits 65-116
  return (addr.lo & 0xfff) <= kGatewayHostMax;
}

bool matches_user_router(const Ipv6Addr& addr) {
  return (addr.hi & 0xff) == 0 && addr.lo == 1;
}

// Hex digits of `value` without leading zeros, e.g. 0x250 -> "250".
std::string hex_digits(uint32_t value) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%x", value);
  return buf;
}

}  // namespace

AddressRole classify(const Ipv6Addr& addr, const GatewayCodecConfig& config,
                     const std::vector<Ipv6Prefix>& pop_blocks) {
  for (const auto& block : pop_blocks)
    if (block.contains(addr)) return AddressRole::PopInfrastructure;
  if (matches_gateway(addr, config)) return AddressRole::Gateway;
  if (matches_user_router(addr)) return AddressRole::UserRouter;
  return AddressRole::Unknown;
}

Ipv4Addr gateway_v6_to_v4(const Ipv6Addr& addr, const GatewayCodecConfig& config) {
  if (!matches_gateway(addr, config))
    fail(Errc::NotAGateway, addr.str() + " does not match the gateway pattern");

  auto reread_decimal = [&](const std::string& digits) -> uint32_t {
    uint32_t value = 0;
    for (char c : digits) {
      if (c < '0' || c > '9')
        fail(Errc::NonDecimalDigits,
             addr.str() + ": hex digit string \"" + digits + "\" has no decimal reading");
      value = value * 10 + static_cast<uint32_t>(c - '0');
    }
    if (value > 255)
      fail(Errc::OctetOverflow,
           addr.str() + ": \"" + digits + "\" exceeds 255 as a decimal octet");
    return value;
  };

  uint32_t x = reread_decimal(hex_digits(addr.group(3)));
  uint32_t y = reread_decimal(hex_digits(static_cast<uint32_t>(addr.lo & 0xfff)));
  return Ipv4Addr{(config.v4_site_base.value & 0xffff0000u) | x << 8 | y};
}

Ipv6Addr gateway_v4_to_v6(const Ipv4Addr& addr, const GatewayCodecConfig& config) {
  if ((addr.value & 0xffff0000u) != (config.v4_site_base.value & 0xffff0000u))
    fail(Errc::OutOfRange, addr.str() + " is outside the gateway IPv4 block");

  // Decimal digit strings are always valid hex; re-read them as hex values.
  auto reread_hex = [](uint8_t octet) -> uint16_t {
    uint16_t value = 0;
    for (char c : std::to_string(octet)) value = static_cast<uint16_t>(value << 4 | (c - '0'));
    return value;
  };

  uint16_t segment = reread_hex(addr.octet(2));
  uint16_t host = reread_hex(addr.octet(3));
  if (segment < kGatewaySegmentMin || segment > kGatewaySegmentMax)
    fail(Errc::OutOfRange, addr.str() + ": segment 0x" + hex_digits(segment) +
                               " is outside the gateway range");
  if (host > kGatewayHostMax)
    fail(Errc::OutOfRange,
         addr.str() + ": host 0x" + hex_digits(host) + " is outside the gateway range");

  Ipv6Addr out = config.v6_site_prefix.base;
  out.hi = (out.hi & ~uint64_t{0xffff}) | segment;
  out.lo = host;
  return out;
}

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::WrongPrefixLength: return "WrongPrefixLength";
    case Errc::PrefixTooShort: return "PrefixTooShort";
    case Errc::NotAGateway: return "NotAGateway";
    case Errc::NonDecimalDigits: return "NonDecimalDigits";
    case Errc::OctetOverflow: return "OctetOverflow";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::EmptyFeed: return "EmptyFeed";
    case Errc::UnknownCountry: return "UnknownCountry";
    case Errc::MalformedPopCode: return "MalformedPopCode";
    case Errc::AdapterUnavailable: return "AdapterUnavailable";
    case Errc::InvalidTopology: return "InvalidTopology";
    case Errc::UnknownTarget: return "UnknownTarget";
    case Errc::NotReached: return "NotReached";
    case Errc::Unreachable: return "Unreachable";
    case Errc::MatrixShapeMismatch: return "MatrixShapeMismatch";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace leomap
