#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "leomap/addressing.hpp"

using namespace leomap;

TEST_CASE("address text round trips through the canonical form") {
  const char* cases[] = {
      "::",
      "::1",
      "1::",
      "2605:59c8::1",
      "2605:59c8:0:100::1",
      "2620:134:b0fe:251::34",
      "2803:9810:5380::1",
      "fe80::1:0:0:1",
      "1:2:3:4:5:6:7:8",
      "2605:0:1::",
  };
  for (const char* text : cases) {
    auto addr = Ipv6Addr::parse(text);
    REQUIRE_MESSAGE(addr.has_value(), text);
    CHECK_EQ(addr->str(), text);
  }
}

TEST_CASE("parser accepts verbose and mixed forms") {
  CHECK_EQ(Ipv6Addr::must_parse("2605:59c8:0000:0000:0000:0000:0000:0001").str(),
           "2605:59c8::1");
  CHECK_EQ(Ipv6Addr::must_parse("2605:59C8::01").str(), "2605:59c8::1");
  CHECK_EQ(Ipv6Addr::must_parse("::ffff:1.2.3.4").str(), "::ffff:102:304");
  CHECK_EQ(Ipv6Addr::must_parse("64:ff9b::192.0.2.33").str(), "64:ff9b::c000:221");
}

TEST_CASE("parser rejects malformed text") {
  const char* bad[] = {
      "", ":", ":::", "1:2", "1:2:3:4:5:6:7:8:9", "12345::", "g::", "1::2::3",
      "1:2:3:4:5:6:7::8", "2605:59c8::1/56", " 2605:59c8::1",
  };
  for (const char* text : bad) CHECK_FALSE_MESSAGE(Ipv6Addr::parse(text).has_value(), text);
}

TEST_CASE("serialize-parse identity on random addresses") {
  testutil::XorShift rng(7);
  for (int i = 0; i < 2000; ++i) {
    Ipv6Addr addr = testutil::random_addr(rng);
    // bias toward zero-heavy addresses where compression kicks in
    if (i % 3 == 0) addr.hi &= 0xffff000000000000ull;
    if (i % 4 == 0) addr.lo &= 0xff;
    auto round = Ipv6Addr::parse(addr.str());
    REQUIRE(round.has_value());
    CHECK_EQ(*round, addr);
  }
}

TEST_CASE("bit positions are 1-based from the most significant bit") {
  auto addr = Ipv6Addr::must_parse("8000::1");
  CHECK(addr.bit(1));
  CHECK_FALSE(addr.bit(2));
  CHECK(addr.bit(128));
  CHECK_FALSE(addr.bit(127));
  CHECK_EQ(Ipv6Addr::must_parse("2620:134:b0fe:251::34").group(3), 0x0251);
}

TEST_CASE("prefix parsing enforces zero host bits") {
  CHECK(Ipv6Prefix::parse("2605:59c8::/40").has_value());
  CHECK_FALSE(Ipv6Prefix::parse("2605:59c8::1/40").has_value());
  CHECK_FALSE(Ipv6Prefix::parse("2605:59c8::/129").has_value());
  CHECK_FALSE(Ipv6Prefix::parse("2605:59c8::").has_value());
  CHECK_EQ(Ipv6Prefix::truncating(Ipv6Addr::must_parse("2605:59c8::1"), 40).str(),
           "2605:59c8::/40");

  auto p = Ipv6Prefix::must_parse("2605:59c8::/40");
  CHECK(p.contains(Ipv6Addr::must_parse("2605:59c8::1")));
  CHECK(p.contains(Ipv6Addr::must_parse("2605:59c8:ff:ff00::1")));
  CHECK_FALSE(p.contains(Ipv6Addr::must_parse("2605:59c9::1")));

  testutil::XorShift rng(3);
  CHECK(Ipv6Prefix::must_parse("::/0").contains(testutil::random_addr(rng)));
}

TEST_CASE("user router address fixes the low 72 bits") {
  CHECK_EQ(user_router_address(Ipv6Prefix::must_parse("2605:59c8::/56")).str(),
           "2605:59c8::1");
  CHECK_EQ(user_router_address(Ipv6Prefix::must_parse("2605:59c8:ff:ff00::/56")).str(),
           "2605:59c8:ff:ff00::1");
  CHECK_EQ(user_router_address(Ipv6Prefix::must_parse("::/56")).str(), "::1");

  CHECK_THROWS_WITH_AS(user_router_address(Ipv6Prefix::must_parse("2605:59c8::/40")),
                       doctest::Contains("/56"), Error);
  try {
    user_router_address(Ipv6Prefix::must_parse("2605:59c8::/40"));
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::WrongPrefixLength);
  }
}

TEST_CASE("candidate enumeration endpoints match the published pattern") {
  CandidateStream stream(Ipv6Prefix::must_parse("2605:59c8::/40"));
  REQUIRE_EQ(stream.size(), 65536);
  CHECK_EQ(stream.at(0).str(), "2605:59c8::1");
  CHECK_EQ(stream.at(1).str(), "2605:59c8:0:100::1");
  CHECK_EQ(stream.at(65535).str(), "2605:59c8:ff:ff00::1");
}

TEST_CASE("candidate enumeration matches an independent byte-arithmetic oracle") {
  // Oracle: repeatedly add 1 << (128 - target_len) to the base, over raw bytes.
  auto oracle = [](const Ipv6Prefix& alloc, int target_len, uint64_t count) {
    std::vector<Ipv6Addr> out;
    auto bytes = alloc.base.to_bytes();
    bytes[15] |= 1;  // trailing router bit
    for (uint64_t i = 0; i < count; ++i) {
      out.push_back(Ipv6Addr::from_bytes(bytes));
      bytes = testutil::add_bytes(bytes, 1, 128 - target_len);
    }
    return out;
  };

  SUBCASE("/42 allocation") {
    auto alloc = Ipv6Prefix::must_parse("2803:9810:5380::/42");
    CandidateStream stream(alloc);
    REQUIRE_EQ(stream.size(), 16384);
    auto expected = oracle(alloc, 56, stream.size());
    size_t i = 0;
    for (const auto& addr : stream) CHECK_EQ(addr, expected[i++]);
    CHECK_EQ(stream.at(0).str(), "2803:9810:5380::1");
    CHECK_EQ(stream.at(16383).str(), "2803:9810:53bf:ff00::1");
  }

  SUBCASE("non-default target length") {
    auto alloc = Ipv6Prefix::must_parse("2605:59c8:1200::/40");
    CandidateStream stream(alloc, 48);
    REQUIRE_EQ(stream.size(), 256);
    auto expected = oracle(alloc, 48, stream.size());
    size_t i = 0;
    for (const auto& addr : stream) CHECK_EQ(addr, expected[i++]);
  }
}

TEST_CASE("single sub-prefix yields exactly the user router address") {
  auto p = Ipv6Prefix::must_parse("2605:59c8:12:3400::/56");
  CandidateStream stream(p);
  REQUIRE_EQ(stream.size(), 1);
  CHECK_EQ(*stream.begin(), user_router_address(p));
}

TEST_CASE("candidate counts and membership for every split up to /56") {
  for (int len = 48; len <= 56; ++len) {
    auto alloc = Ipv6Prefix::truncating(Ipv6Addr::must_parse("2605:59c8::"), len);
    CandidateStream stream(alloc);
    CHECK_EQ(stream.size(), uint64_t{1} << (56 - len));

    Ipv6Addr previous{};
    bool first = true;
    for (const auto& addr : stream) {
      CHECK(alloc.contains(addr));
      CHECK_EQ(classify(addr), AddressRole::UserRouter);
      if (!first) CHECK(previous < addr);
      previous = addr;
      first = false;
    }
  }
}

TEST_CASE("oversized enumerations are refused, not materialized") {
  CHECK_THROWS_AS(CandidateStream(Ipv6Prefix::must_parse("2605::/32"), 56), Error);
  try {
    CandidateStream stream(Ipv6Prefix::must_parse("2605::/32"), 56);
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::PrefixTooShort);
  }
  // custom cap; the bound is exclusive so a /32 always trips the default
  CHECK_THROWS_AS(CandidateStream(Ipv6Prefix::must_parse("2605:59c8::/40"), 56, 1000), Error);
  CHECK_THROWS_AS(CandidateStream(Ipv6Prefix::must_parse("2605:59c8::/40"), 56, 65536), Error);
  CHECK_NOTHROW(CandidateStream(Ipv6Prefix::must_parse("2605:59c8::/40"), 56, 65537));
  // bad target lengths
  CHECK_THROWS_AS(CandidateStream(Ipv6Prefix::must_parse("2605:59c8::/40"), 32), Error);
  CHECK_THROWS_AS(CandidateStream(Ipv6Prefix::must_parse("2605:59c8::/40"), 70), Error);
}

TEST_CASE("classification follows the documented precedence") {
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:251::34")), AddressRole::Gateway);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:250::135")), AddressRole::Gateway);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0ff::5")),
           AddressRole::PopInfrastructure);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b004::1")),
           AddressRole::PopInfrastructure);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2605:59c8:0:100::1")), AddressRole::UserRouter);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2605:59c8::2")), AddressRole::Unknown);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:247::34")), AddressRole::Unknown);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:254::34")), AddressRole::Unknown);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:251::158")), AddressRole::Unknown);
  CHECK_EQ(classify(Ipv6Addr::must_parse("2620:134:b0fe:251:0:0:1:34")),
           AddressRole::Unknown);

  // a pop block shadowing the gateway pattern wins, in any block order
  auto gateway = Ipv6Addr::must_parse("2620:134:b0fe:251::34");
  std::vector<Ipv6Prefix> blocks = {Ipv6Prefix::must_parse("2620:134:b0ff::/116"),
                                    Ipv6Prefix::must_parse("2620:134:b0fe::/48")};
  CHECK_EQ(classify(gateway, {}, blocks), AddressRole::PopInfrastructure);
  std::swap(blocks[0], blocks[1]);
  CHECK_EQ(classify(gateway, {}, blocks), AddressRole::PopInfrastructure);
}

TEST_CASE("gateway codec reinterprets digit strings") {
  CHECK_EQ(gateway_v6_to_v4(Ipv6Addr::must_parse("2620:134:b0fe:250::135")).str(),
           "172.16.250.135");
  CHECK_EQ(gateway_v6_to_v4(Ipv6Addr::must_parse("2620:134:b0fe:251::34")).str(),
           "172.16.251.34");
  CHECK_EQ(gateway_v4_to_v6(Ipv4Addr::must_parse("172.16.250.135")).str(),
           "2620:134:b0fe:250::135");
  CHECK_EQ(gateway_v4_to_v6(Ipv4Addr::must_parse("172.16.251.34")).str(),
           "2620:134:b0fe:251::34");

  try {
    gateway_v6_to_v4(Ipv6Addr::must_parse("2620:134:b0fe:24a::10"));
    FAIL("expected NonDecimalDigits");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::NonDecimalDigits);
  }
  try {
    gateway_v6_to_v4(Ipv6Addr::must_parse("2605:59c8::1"));
    FAIL("expected NotAGateway");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::NotAGateway);
  }
  try {
    gateway_v4_to_v6(Ipv4Addr::must_parse("172.17.0.1"));
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::OutOfRange);
  }
  try {
    gateway_v4_to_v6(Ipv4Addr::must_parse("172.16.200.1"));  // 0x200 past the segment range
    FAIL("expected OutOfRange");
  } catch (const Error& e) {
    CHECK_EQ(e.code(), Errc::OutOfRange);
  }
}

TEST_CASE("gateway codec round-trips over its whole valid domain") {
  // Decimal-only segment strings within [0x248, 0x253]: 248, 249, 250..253.
  const uint16_t segments[] = {0x248, 0x249, 0x250, 0x251, 0x252, 0x253};
  size_t checked = 0;
  for (uint16_t segment : segments) {
    for (uint16_t host = 0; host <= kGatewayHostMax; ++host) {
      char digits[8];
      std::snprintf(digits, sizeof digits, "%x", host);
      bool decimal_only = std::string_view(digits).find_first_of("abcdef") ==
                          std::string_view::npos;
      Ipv6Addr gateway{0x26200134b0fe0000ull | segment, host};
      if (!decimal_only) {
        CHECK_THROWS_AS(gateway_v6_to_v4(gateway), Error);
        continue;
      }
      auto v4 = gateway_v6_to_v4(gateway);
      CHECK_EQ(gateway_v4_to_v6(v4), gateway);
      ++checked;
    }
  }
  CHECK_EQ(checked, 6 * 158);  // 158 decimal-only host strings in [0, 0x157]
}
