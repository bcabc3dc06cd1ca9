#include <doctest.h>

#include "helpers.hpp"
#include "leomap/ptrmap.hpp"

using namespace leomap;

namespace {

// Independent nibble oracle: build the reverse name from the raw bytes.
std::string nibble_oracle(const Ipv6Addr& addr) {
  static const char* hex = "0123456789abcdef";
  auto bytes = addr.to_bytes();
  std::string nibbles;
  for (const auto byte : bytes) {
    nibbles += hex[byte >> 4];
    nibbles += hex[byte & 0xf];
  }
  std::string out;
  for (auto it = nibbles.rbegin(); it != nibbles.rend(); ++it) {
    out += *it;
    out += '.';
  }
  return out + "ip6.arpa";
}

Ipv6Addr decode_reverse_name(const std::string& name) {
  // strips ".ip6.arpa", reads nibbles back in forward order
  auto stem = name.substr(0, name.size() - 9);
  std::array<uint8_t, 16> bytes{};
  int nibble_index = 31;
  for (size_t i = 0; i < stem.size(); i += 2, --nibble_index) {
    char c = stem[i];
    uint8_t value = static_cast<uint8_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    bytes[static_cast<size_t>(nibble_index) / 2] |=
        nibble_index % 2 ? value : static_cast<uint8_t>(value << 4);
  }
  return Ipv6Addr::from_bytes(bytes);
}

}  // namespace

TEST_CASE("reverse names expand every nibble in reverse order") {
  CHECK_EQ(reverse_name(Ipv6Addr::must_parse("2605:59c8::1")),
           "1.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.0.8.c.9.5.5.0.6.2.ip6.arpa");

  std::string loopback = "1.";
  for (int i = 0; i < 31; ++i) loopback += "0.";
  loopback += "ip6.arpa";
  CHECK_EQ(reverse_name(Ipv6Addr::must_parse("::1")), loopback);

  auto gateway = Ipv6Addr::must_parse("2620:134:b0fe:251::34");
  CHECK_EQ(reverse_name(gateway), nibble_oracle(gateway));
  CHECK_MESSAGE(reverse_name(gateway).ends_with(
                    "1.5.2.0.e.f.0.b.4.3.1.0.0.2.6.2.ip6.arpa"),
                reverse_name(gateway));
}

TEST_CASE("reverse names decode back to the address") {
  testutil::XorShift rng(11);
  std::set<std::string> seen;
  for (int i = 0; i < 2000; ++i) {
    auto addr = testutil::random_addr(rng);
    auto name = reverse_name(addr);
    CHECK_EQ(name, nibble_oracle(addr));
    CHECK_EQ(decode_reverse_name(name), addr);
    seen.insert(name);  // injectivity
  }
  CHECK_EQ(seen.size(), 2000);
}

TEST_CASE("pop codes split into site and index") {
  auto ashburn = parse_pop_code("ashnvax2");
  CHECK_EQ(ashburn.site, "ashnvax");
  CHECK_EQ(ashburn.index, 2);
  CHECK_EQ(ashburn.code, "ashnvax2");

  auto seattle = parse_pop_code("sttlwax1");
  CHECK_EQ(seattle.site, "sttlwax");
  CHECK_EQ(seattle.index, 1);

  CHECK_EQ(parse_pop_code("jtnaidn12").index, 12);
  CHECK_EQ(parse_pop_code("STTLWAX1").code, "sttlwax1");

  const char* bad[] = {"nodigits", "", "ab1", "pop0", "sttlwax01", "123", "st-lwax1",
                       "abc1def2"};
  for (const char* code : bad) {
    CHECK_FALSE_MESSAGE(try_parse_pop_code(code).has_value(), code);
    CHECK_THROWS_AS(parse_pop_code(code), Error);
  }
}

TEST_CASE("ptr grammar recognizes customers, pop hosts and nothing else") {
  auto chicago = parse_ptr("customer.chcoilx1.pop.starlinkisp.net");
  CHECK_EQ(chicago.kind, PtrClassification::Kind::Customer);
  CHECK_EQ(chicago.pop->code, "chcoilx1");

  auto seattle = parse_ptr("customer.sttlwax1.pop.starlinkisp.net");
  CHECK_EQ(seattle.kind, PtrClassification::Kind::Customer);
  CHECK_EQ(seattle.pop->code, "sttlwax1");

  auto host = parse_ptr("edge1.sttlwax1.pop.starlinkisp.net");
  CHECK_EQ(host.kind, PtrClassification::Kind::PopHost);
  CHECK_EQ(host.label, "edge1");
  CHECK_EQ(host.pop->code, "sttlwax1");

  // case-insensitive, single trailing dot tolerated
  auto relaxed = parse_ptr("Customer.ChCoILX1.POP.StarlinkISP.NET.");
  CHECK_EQ(relaxed.kind, PtrClassification::Kind::Customer);
  CHECK_EQ(relaxed.pop->code, "chcoilx1");

  const char* foreign[] = {
      "host.example.com",
      "customer.chcoilx1.pop.starlinkisp.net.extra",
      "a.customer.chcoilx1.pop.starlinkisp.net",
      "customer.nodigits.pop.starlinkisp.net",
      "customer.chcoilx1.pop.starlinkisp.org",
      "customer.chcoilx1.pop.starlinkisp.net..",
      ".chcoilx1.pop.starlinkisp.net",
      "",
  };
  for (const char* name : foreign)
    CHECK_MESSAGE(parse_ptr(name).kind == PtrClassification::Kind::NotStarlink, name);
}

TEST_CASE("grammar round-trips every formatted customer name") {
  testutil::XorShift rng(5);
  for (int i = 0; i < 200; ++i) {
    std::string site;
    for (int c = 0; c < 4 + static_cast<int>(rng.below(6)); ++c)
      site += static_cast<char>('a' + rng.below(26));
    int index = 1 + static_cast<int>(rng.below(9));
    PopId pop = parse_pop_code(site + std::to_string(index));

    auto customer = parse_ptr(customer_ptr_name(pop));
    REQUIRE_EQ(customer.kind, PtrClassification::Kind::Customer);
    CHECK_EQ(*customer.pop, pop);

    auto host = parse_ptr(pop_host_ptr_name("edge7", pop));
    REQUIRE_EQ(host.kind, PtrClassification::Kind::PopHost);
    CHECK_EQ(*host.pop, pop);
    CHECK_EQ(host.label, "edge7");
  }
}

TEST_CASE("ptr parser survives arbitrary byte strings") {
  testutil::XorShift rng(13);
  for (int i = 0; i < 20000; ++i) {
    std::string garbage;
    size_t len = rng.below(80);
    for (size_t c = 0; c < len; ++c)
      garbage += static_cast<char>(rng.below(256));
    CHECK_NOTHROW(parse_ptr(garbage));
  }
}
