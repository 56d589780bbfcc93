#include <doctest.h>

#include <cmath>
#include <set>

#include "stochmech/random.hpp"

using namespace stochmech;

// Published known-answer vectors for Philox4x32-10.
TEST_CASE("philox known answers") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::generate({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("substreams differ") {
  std::set<std::uint32_t> firsts;
  for (auto s : {Substream::init_sampling, Substream::stepping, Substream::com_experiment}) {
    firsts.insert(random_block(42, s, 0, 0)[0]);
  }
  firsts.insert(random_block(43, Substream::stepping, 0, 0)[0]);
  firsts.insert(random_block(42, Substream::stepping, 1, 0)[0]);
  firsts.insert(random_block(42, Substream::stepping, 0, 1)[0]);
  firsts.insert(random_block(42, Substream::stepping, 0, std::uint64_t{1} << 32)[0]);
  CHECK(firsts.size() == 7);
}

TEST_CASE("uniform range and normal moments") {
  CHECK(uniform01(0, 0) == 0.0);
  CHECK(uniform01(0xffffffffu, 0xffffffffu) < 1.0);
  const std::size_t n = 400000;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = normal_pair(random_block(9, Substream::test, i, 0));
    for (double v : z) {
      s1 += v;
      s2 += v * v;
      s3 += v * v * v;
      s4 += v * v * v * v;
    }
  }
  const double m = 2.0 * n;
  CHECK(std::abs(s1 / m) < 4.0 / std::sqrt(m));
  CHECK(std::abs(s2 / m - 1.0) < 4.0 * std::sqrt(2.0 / m));
  CHECK(std::abs(s3 / m) < 4.0 * std::sqrt(15.0 / m));
  CHECK(std::abs(s4 / m - 3.0) < 4.0 * std::sqrt(96.0 / m));
}
