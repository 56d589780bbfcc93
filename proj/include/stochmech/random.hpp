#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace stochmech {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// Every draw is a pure function of (key, counter), so each particle and step
/// owns an independent substream and results do not depend on how work is
/// split across threads.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Named substreams drawn from one seed.
enum class Substream : std::uint32_t {
  init_sampling = 1,
  stepping = 2,
  com_experiment = 3,
  test = 99,
};

/// Four 32-bit words for (seed, substream, item, step).
inline Philox4x32::Counter random_block(std::uint64_t seed, Substream stream, std::uint64_t item, std::uint64_t step) {
  const Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  // Step gets 32 bits; the stream tag is folded into the high word alongside it.
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(item), static_cast<std::uint32_t>(item >> 32),
                                static_cast<std::uint32_t>(step),
                                static_cast<std::uint32_t>(stream) ^ (static_cast<std::uint32_t>(step >> 32) << 8)};
  return Philox4x32::generate(ctr, key);
}

/// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

/// Two independent standard normals from one block (Box-Muller).
inline std::array<double, 2> normal_pair(const Philox4x32::Counter& b) {
  const double u1 = 1.0 - uniform01(b[0], b[1]);  // (0, 1]
  const double u2 = uniform01(b[2], b[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace stochmech
