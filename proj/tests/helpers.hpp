#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "leomap/addressing.hpp"

namespace testutil {

// Test-side generator, separate seeding scheme from the library's.
struct XorShift {
  uint64_t state;
  explicit XorShift(uint64_t seed) : state(seed ? seed : 0x853c49e6748fea9bull) {}
  uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  uint64_t below(uint64_t n) { return next() % n; }
};

inline leomap::Ipv6Addr random_addr(XorShift& rng) {
  return {rng.next(), rng.next()};
}

// Independent 128-bit arithmetic on byte arrays, for enumeration oracles.
inline std::array<uint8_t, 16> add_bytes(std::array<uint8_t, 16> bytes, uint64_t value,
                                         int bit_offset_from_lsb) {
  // adds value << bit_offset to the 128-bit big-endian integer
  for (int bit = 63; bit >= 0; --bit) {
    if (!(value >> bit & 1)) continue;
    int position = bit + bit_offset_from_lsb;  // 0 = least significant bit
    int byte_index = 15 - position / 8;
    uint16_t carry = static_cast<uint16_t>(1u << (position % 8));
    for (int i = byte_index; i >= 0 && carry; --i) {
      uint16_t sum = static_cast<uint16_t>(bytes[i] + carry);
      bytes[i] = static_cast<uint8_t>(sum);
      carry = static_cast<uint16_t>(sum >> 8);
    }
  }
  return bytes;
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("leomap-test-" + tag + "-" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace testutil
