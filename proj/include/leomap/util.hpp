#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace leomap::detail {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline uint64_t fnv1a(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t mix(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
  return splitmix64(s);
}

/// Small deterministic generator; identical sequences on every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // decorrelate trivially close seeds
    next();
    next();
  }

  uint64_t next() { return splitmix64(state_); }

  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

 private:
  uint64_t state_;
};

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
std::string read_file(const std::string& path);

/// Fixed-precision decimal rendering used by all file writers, so outputs
/// are byte-stable across platforms. Trailing zeros trimmed.
std::string format_ms(double value);

}  // namespace leomap::detail
