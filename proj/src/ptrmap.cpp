#include "leomap/ptrmap.hpp"

#include <cctype>

#include "leomap/util.hpp"

namespace leomap {

namespace {

constexpr std::string_view kZoneSuffix[] = {"pop", "starlinkisp", "net"};
constexpr size_t kMinSiteLength = 4;
constexpr int kMaxPopIndex = 1000000;

bool is_lower_alnum(std::string_view text) {
  for (char c : text)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c))))
      return false;
  return !text.empty();
}

}  // namespace

std::optional<PopId> try_parse_pop_code(std::string_view raw) {
  std::string code = detail::to_lower(raw);
  if (!is_lower_alnum(code)) return std::nullopt;

  size_t digits = code.size();
  while (digits > 0 && std::isdigit(static_cast<unsigned char>(code[digits - 1]))) --digits;
  if (digits == code.size()) return std::nullopt;  // no numeric suffix
  std::string site = code.substr(0, digits);
  std::string_view index_str = std::string_view(code).substr(digits);

  if (site.size() < kMinSiteLength) return std::nullopt;
  for (char c : site)
    if (std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  if (index_str.size() > 1 && index_str[0] == '0') return std::nullopt;
  if (index_str.size() > 7) return std::nullopt;

  int index = 0;
  for (char c : index_str) index = index * 10 + (c - '0');
  if (index < 1 || index > kMaxPopIndex) return std::nullopt;

  return PopId{std::move(code), std::move(site), index};
}

PopId parse_pop_code(std::string_view code) {
  auto pop = try_parse_pop_code(code);
  if (!pop)
    fail(Errc::MalformedPopCode, "not a PoP code: \"" + std::string(code) + "\"");
  return *pop;
}

std::string reverse_name(const Ipv6Addr& addr) {
  static const char* hex = "0123456789abcdef";
  auto bytes = addr.to_bytes();
  std::string out;
  out.reserve(72);
  for (int i = 15; i >= 0; --i) {
    out += hex[bytes[i] & 0xf];
    out += '.';
    out += hex[bytes[i] >> 4];
    out += '.';
  }
  out += "ip6.arpa";
  return out;
}

PtrClassification parse_ptr(std::string_view name) {
  std::string lowered = detail::to_lower(detail::trim(name));
  if (!lowered.empty() && lowered.back() == '.') lowered.pop_back();

  auto labels = detail::split(lowered, '.');
  if (labels.size() != 5) return {};
  for (size_t i = 0; i < 3; ++i)
    if (labels[2 + i] != kZoneSuffix[i]) return {};

  auto pop = try_parse_pop_code(labels[1]);
  if (!pop) return {};
  const std::string& label = labels[0];
  if (label.empty() || label.size() > 63) return {};

  if (label == "customer")
    return {PtrClassification::Kind::Customer, std::move(pop), {}};
  return {PtrClassification::Kind::PopHost, std::move(pop), label};
}

std::string customer_ptr_name(const PopId& pop) {
  return "customer." + pop.code + ".pop.starlinkisp.net";
}

std::string pop_host_ptr_name(std::string_view label, const PopId& pop) {
  return std::string(label) + "." + pop.code + ".pop.starlinkisp.net";
}

}  // namespace leomap
