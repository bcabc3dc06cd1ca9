#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "leomap/errors.hpp"

namespace leomap {

/// 128-bit IPv6 address. Bit positions throughout this codebase are 1-based
/// counting from the most significant bit, so bit 1 is the top bit of `hi`
/// and bit 128 is the lowest bit of `lo`.
struct Ipv6Addr {
  uint64_t hi = 0;
  uint64_t lo = 0;

  static std::optional<Ipv6Addr> parse(std::string_view text);
  /// Parse or throw Error(InvalidArgument). For literals known to be valid.
  static Ipv6Addr must_parse(std::string_view text);
  static Ipv6Addr from_bytes(const std::array<uint8_t, 16>& bytes);

  std::array<uint8_t, 16> to_bytes() const;

  /// Canonical text form: lowercase hex, longest zero run compressed.
  std::string str() const;

  /// Value of 1-based bit position `pos` in [1,128].
  bool bit(int pos) const;

  /// 16-bit group `idx` in [0,8), 0 = most significant.
  uint16_t group(int idx) const;

  auto operator<=>(const Ipv6Addr&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Ipv6Addr& addr) {
  return os << addr.str();
}

struct Ipv6AddrHash {
  std::size_t operator()(const Ipv6Addr& a) const noexcept {
    uint64_t h = a.hi * 0x9e3779b97f4a7c15ull;
    h ^= a.lo + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

/// Masked prefix: every bit of `base` past `length` is zero.
struct Ipv6Prefix {
  Ipv6Addr base;
  int length = 0;  // [0,128]

  /// Parses "addr/len". Rejects host bits set past the prefix length.
  static std::optional<Ipv6Prefix> parse(std::string_view text);
  static Ipv6Prefix must_parse(std::string_view text);
  /// Masks host bits away instead of rejecting them.
  static Ipv6Prefix truncating(const Ipv6Addr& addr, int length);

  bool contains(const Ipv6Addr& addr) const;
  std::string str() const;

  auto operator<=>(const Ipv6Prefix&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const Ipv6Prefix& prefix) {
  return os << prefix.str();
}

struct Ipv4Addr {
  uint32_t value = 0;

  static std::optional<Ipv4Addr> parse(std::string_view text);
  static Ipv4Addr must_parse(std::string_view text);

  std::string str() const;
  uint8_t octet(int idx) const { return static_cast<uint8_t>(value >> (8 * (3 - idx))); }

  auto operator<=>(const Ipv4Addr&) const = default;
};

enum class AddressRole { UserRouter, Gateway, PopInfrastructure, Unknown };

const char* to_string(AddressRole role);

/// Gateway address family and the IPv4 block it mirrors digit-for-digit.
struct GatewayCodecConfig {
  Ipv6Prefix v6_site_prefix = Ipv6Prefix::must_parse("2620:134:b0fe::/48");
  Ipv4Addr v4_site_base = Ipv4Addr::must_parse("172.16.0.0");  // /16
};

/// Gateway bit pattern: group 4 (bits 49-64) within [0x0248, 0x0253],
/// bits 65-116 zero, final 12 bits at most 0x157.
inline constexpr uint16_t kGatewaySegmentMin = 0x0248;
inline constexpr uint16_t kGatewaySegmentMax = 0x0253;
inline constexpr uint16_t kGatewayHostMax = 0x157;

/// Address blocks reserved for PoP infrastructure.
std::vector<Ipv6Prefix> default_pop_blocks();

/// WAN address of the router holding a /56 delegation: bits 57-127 zero,
/// bit 128 one. Throws Error(WrongPrefixLength) unless prefix length is 56.
Ipv6Addr user_router_address(const Ipv6Prefix& prefix56);

inline constexpr uint64_t kDefaultCandidateCap = uint64_t{1} << 24;

/// Lazy ascending enumeration of one probe candidate per sub-prefix of
/// `alloc` at `target_len`. Candidate = sub-prefix base with bit 128 set.
class CandidateStream {
 public:
  /// Throws Error(PrefixTooShort) when the sub-prefix count exceeds `cap`,
  /// Error(InvalidArgument) unless alloc.length <= target_len <= 64.
  CandidateStream(const Ipv6Prefix& alloc, int target_len = 56,
                  uint64_t cap = kDefaultCandidateCap);

  uint64_t size() const { return count_; }
  Ipv6Addr at(uint64_t index) const;

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = Ipv6Addr;
    using difference_type = std::ptrdiff_t;
    using pointer = const Ipv6Addr*;
    using reference = Ipv6Addr;

    iterator() = default;
    iterator(const CandidateStream* stream, uint64_t index)
        : stream_(stream), index_(index) {}

    Ipv6Addr operator*() const { return stream_->at(index_); }
    iterator& operator++() {
      ++index_;
      return *this;
    }
    iterator operator++(int) {
      iterator old = *this;
      ++index_;
      return old;
    }
    bool operator==(const iterator& other) const { return index_ == other.index_; }

   private:
    const CandidateStream* stream_ = nullptr;
    uint64_t index_ = 0;
  };

  iterator begin() const { return iterator(this, 0); }
  iterator end() const { return iterator(this, count_); }

 private:
  Ipv6Prefix alloc_;
  int target_len_ = 56;
  uint64_t count_ = 0;
};

inline CandidateStream generate_candidates(const Ipv6Prefix& alloc,
                                           int target_len = 56,
                                           uint64_t cap = kDefaultCandidateCap) {
  return CandidateStream(alloc, target_len, cap);
}

/// Total classification. Precedence: PopInfrastructure > Gateway > UserRouter.
AddressRole classify(const Ipv6Addr& addr,
                     const GatewayCodecConfig& config = {},
                     const std::vector<Ipv6Prefix>& pop_blocks = default_pop_blocks());

/// Digit-string reinterpretation of a gateway address: the hex digits of
/// group 4 and of the final 12 bits are re-read as decimal octets. Partial:
/// hex letters and octets past 255 have no decimal reading.
Ipv4Addr gateway_v6_to_v4(const Ipv6Addr& addr, const GatewayCodecConfig& config = {});

/// Inverse mapping; round-trips with gateway_v6_to_v4 on the valid domain.
Ipv6Addr gateway_v4_to_v6(const Ipv4Addr& addr, const GatewayCodecConfig& config = {});

}  // namespace leomap
