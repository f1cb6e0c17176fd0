#include "sgf/rng.hpp"

#include <cmath>

namespace sgf {
namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) noexcept {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  lo = static_cast<std::uint64_t>(p);
}

// word >> 11 leaves 53 uniform mantissa bits.
inline double to_unit(std::uint64_t w) noexcept {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

}  // namespace

Counter4 philox_block(const Counter4& counter, const Key2& key) noexcept {
  std::uint64_t x0 = counter[0], x1 = counter[1], x2 = counter[2], x3 = counter[3];
  std::uint64_t k0 = key[0], k1 = key[1];
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, x0, hi0, lo0);
    mulhilo(kMul1, x2, hi1, lo1);
    x0 = hi1 ^ x1 ^ k0;
    x1 = lo1;
    x2 = hi0 ^ x3 ^ k1;
    x3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return {x0, x1, x2, x3};
}

std::array<double, 4> uniform4(const Counter4& counter, const Key2& key) noexcept {
  const Counter4 w = philox_block(counter, key);
  return {to_unit(w[0]), to_unit(w[1]), to_unit(w[2]), to_unit(w[3])};
}

std::array<double, 4> normal4(const Counter4& counter, const Key2& key) noexcept {
  const Counter4 w = philox_block(counter, key);
  constexpr double two_pi = 6.283185307179586476925286766559;
  std::array<double, 4> z;
  for (int p = 0; p < 2; ++p) {
    // u1 shifted into (0,1] so log(u1) is finite.
    const double u1 = static_cast<double>((w[2 * p] >> 11) + 1) * 0x1.0p-53;
    const double u2 = to_unit(w[2 * p + 1]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    z[2 * p] = r * std::cos(two_pi * u2);
    z[2 * p + 1] = r * std::sin(two_pi * u2);
  }
  return z;
}

}  // namespace sgf
