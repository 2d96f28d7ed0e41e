#pragma once

#include <array>
#include <cstdint>

namespace nlfp::rng {

// Philox4x64-10 (Salmon et al., Random123). Stateless: the output block is a
// pure function of (counter, key), which is what lets two simulations share
// noise exactly without sharing generator state.
using Counter = std::array<std::uint64_t, 4>;
using Key = std::array<std::uint64_t, 2>;

Counter philox4x64(Counter counter, Key key);

// Stream tags occupy counter word 2 so different consumers of one seed never
// collide.
enum class Stream : std::uint64_t {
  kBrownian = 0,
  kInitialSample = 1,
  kValidation = 2,
  kCertificate = 3,
  kTest = 4,
};

// Uniform on [0, 1) with 53 random bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
inline double to_unit_open0(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Block of four words for (seed, a, b, stream).
inline Counter block(std::uint64_t seed, std::uint64_t a, std::uint64_t b, Stream s) {
  return philox4x64({a, b, static_cast<std::uint64_t>(s), 0}, {seed, 0x9E3779B97F4A7C15ULL});
}

// Standard normal via Box-Muller on the first two words of the block.
double standard_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b, Stream s);

// Uniform on [0, 1) from the first word of the block.
double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, Stream s);

}  // namespace nlfp::rng
