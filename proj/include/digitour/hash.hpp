#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace digitour {

std::uint64_t fnv1a64(std::string_view bytes);

// 16 lowercase hex digits.
std::string hex64(std::uint64_t v);

// splitmix64 finalizer; used to derive independent RNG seeds.
std::uint64_t mix64(std::uint64_t x);

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  return mix64(mix64(mix64(seed ^ 0x5eedULL) + a) + b) ^ mix64(c + 0x9e37ULL);
}

}  // namespace digitour
