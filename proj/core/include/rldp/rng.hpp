#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace rldp {

// Philox4x32-10 (Salmon et al., SC'11). Stateless: output is a pure function of (counter, key).
struct Philox4x32 {
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Block generate(Block ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Uniform in (0,1], never zero.
inline double u01(std::uint32_t w) { return (static_cast<double>(w) + 0.5) * (1.0 / 4294967296.0); }

// Two standard normals for trajectory `traj`, step `k`, keyed by `seed`.
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint64_t traj, std::uint32_t k,
                                         std::uint32_t block = 0) {
  Philox4x32::Key key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  Philox4x32::Block ctr{k, block, static_cast<std::uint32_t>(traj), static_cast<std::uint32_t>(traj >> 32)};
  auto w = Philox4x32::generate(ctr, key);
  // combine two words per uniform for 53-bit resolution
  double u1 = (static_cast<double>((std::uint64_t{w[0]} << 21) ^ (w[1] >> 11)) + 0.5) * 0x1p-53;
  double u2 = (static_cast<double>((std::uint64_t{w[2]} << 21) ^ (w[3] >> 11)) + 0.5) * 0x1p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace rldp
