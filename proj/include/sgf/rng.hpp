#pragma once
// Counter-based random streams (Philox4x64-10).
//
// Every draw is a pure function of (key, counter): the key names a logical
// stream (master seed + domain tag), the counter addresses one 256-bit block
// inside it. Any subset of a stream can be generated independently, in any
// order, on any worker, which is what makes replicate-level parallelism and
// nested designs (component d+1 reuses the draws of components 1..d)
// deterministic by construction.

#include <array>
#include <cstdint>

namespace sgf {

using Counter4 = std::array<std::uint64_t, 4>;
using Key2 = std::array<std::uint64_t, 2>;

// One 10-round Philox4x64 block. Reference vectors in the tests pin the
// output words bit-for-bit; do not touch the constants without updating them.
Counter4 philox_block(const Counter4& counter, const Key2& key) noexcept;

// Four uniforms in [0,1), 53-bit mantissas, one per output word.
std::array<double, 4> uniform4(const Counter4& counter, const Key2& key) noexcept;

// Four independent N(0,1) draws from one block (Box-Muller on word pairs).
std::array<double, 4> normal4(const Counter4& counter, const Key2& key) noexcept;

// Domain tags keep unrelated consumers of the same master seed out of each
// other's counter space.
enum class StreamTag : std::uint64_t {
  coefficients = 0x9e3779b97f4a7c15ull,
  monte_carlo = 0xc2b2ae3d27d4eb4full,
  scratch = 0x165667b19e3779f9ull,
};

inline Key2 stream_key(std::uint64_t seed, StreamTag tag) noexcept {
  return {seed, static_cast<std::uint64_t>(tag)};
}

// Thin handle for call sites that address normals by structured ids,
// e.g. block(component, ell, m) for harmonic coefficients.
struct NormalStream {
  Key2 key;

  NormalStream(std::uint64_t seed, StreamTag tag) : key(stream_key(seed, tag)) {}

  std::array<double, 4> block(std::uint64_t c0, std::uint64_t c1 = 0,
                              std::uint64_t c2 = 0, std::uint64_t c3 = 0) const noexcept {
    return normal4({c0, c1, c2, c3}, key);
  }
};

}  // namespace sgf
