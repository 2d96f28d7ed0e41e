#include <doctest.h>

#include <cmath>
#include <set>

#include "nlfp/rng.hpp"

using namespace nlfp::rng;

TEST_CASE("philox4x64-10 known answers") {
  // Random123 reference vectors.
  CHECK(philox4x64({0, 0, 0, 0}, {0, 0}) ==
        Counter{0x16554d9eca36314cULL, 0xdb20fe9d672d0fdcULL, 0xd7e772cee186176bULL,
                0x7e68b68aec7ba23bULL});
  CHECK(philox4x64({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                    0x082efa98ec4e6c89ULL},
                   {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL}) ==
        Counter{0xa528f45403e61d95ULL, 0x38c72dbd566e9788ULL, 0xa5a1610e72fd18b5ULL,
                0x57bd43b5e52b7fe6ULL});
}

TEST_CASE("block layout matches numpy's Philox with the same counter and key") {
  // numpy.random.Philox(key=[42, 0x9E3779B97F4A7C15], counter=[4, 3, 4, 0]).random_raw(4)
  // (numpy increments the counter before each block).
  CHECK(block(42, 5, 3, Stream::kTest) ==
        Counter{0x496f6fc0a1f5f725ULL, 0xa8ea0a313f9cbeb8ULL, 0xe4bb0893ac646eb8ULL,
                0x0b8e17bf38a42337ULL});
  CHECK(philox4x64({1, 0, 0, 0}, {0, 0}) ==
        Counter{0x02f4ba6408e4d89bULL, 0x3dd62b0b9ca8c5b2ULL, 0x1c8667a55d902e79ULL,
                0x907d7a052fd5b4dcULL});
}

TEST_CASE("unit conversions stay inside their intervals") {
  CHECK(to_unit(0) == 0.0);
  CHECK(to_unit(~0ULL) < 1.0);
  CHECK(to_unit_open0(0) > 0.0);
  CHECK(to_unit_open0(~0ULL) == 1.0);
}

TEST_CASE("streams and keys do not collide") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 5; ++s)
    for (std::uint64_t a = 0; a < 20; ++a) seen.insert(block(1, a, 0, static_cast<Stream>(s))[0]);
  CHECK(seen.size() == 100);
  CHECK(block(1, 2, 3, Stream::kBrownian) == block(1, 2, 3, Stream::kBrownian));
  CHECK(block(1, 2, 3, Stream::kBrownian) != block(2, 2, 3, Stream::kBrownian));
}

TEST_CASE("standard normal moments") {
  const int n = 200000;
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(9, static_cast<std::uint64_t>(i), 0, Stream::kTest);
    s1 += z;
    s2 += z * z;
    s4 += z * z * z * z;
  }
  // Tolerances are 5 standard errors: sd(z)=1, sd(z^2)=sqrt(2), sd(z^4)=sqrt(96).
  CHECK(std::abs(s1 / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(s4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
}
