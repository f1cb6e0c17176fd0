#include <doctest.h>

#include <cmath>
#include <cstdint>

#include "sgf/rng.hpp"

using namespace sgf;

TEST_SUITE_BEGIN("rng");

TEST_CASE("philox block matches reference vectors") {
  // Frozen outputs of Philox4x64-10 for fixed (counter, key) addresses,
  // cross-checked against an independent implementation.
  struct Vec {
    Counter4 ctr;
    Key2 key;
    Counter4 out;
  };
  const Vec vecs[] = {
      {{0x0000000000000001ull, 0, 0, 0},
       {0, 0},
       {0x02f4ba6408e4d89bull, 0x3dd62b0b9ca8c5b2ull, 0x1c8667a55d902e79ull,
        0x907d7a052fd5b4dcull}},
      {{0, 0, 0, 0},
       {0xffffffffffffffffull, 0xffffffffffffffffull},
       {0x44b7493d1acfc229ull, 0x6636af8e997921ddull, 0x3f73e132b5b3780eull,
        0x605644dde03b01b1ull}},
      {{0x243f6a8885a308d4ull, 0x13198a2e03707344ull, 0xa4093822299f31d0ull,
        0x082efa98ec4e6c89ull},
       {0x452821e638d01377ull, 0xbe5466cf34e90c6cull},
       {0x4c8e672094922aa3ull, 0x527061cd2884102aull, 0xf4c265b2d783d553ull,
        0x0556e76cb0298c8dull}},
      {{0x0000000000000008ull, 0, 0, 0},
       {0x123456789abcdef0ull, 0xfedcba9876543210ull},
       {0x7fc74ebfbe857bafull, 0xe4042b27ed172e5cull, 0x786d00d664a019bbull,
        0x0d44976f452d76aeull}},
  };
  for (const Vec& v : vecs) {
    const Counter4 got = philox_block(v.ctr, v.key);
    CHECK(got[0] == v.out[0]);
    CHECK(got[1] == v.out[1]);
    CHECK(got[2] == v.out[2]);
    CHECK(got[3] == v.out[3]);
  }
}

TEST_CASE("draws are pure functions of the address") {
  const Key2 key = stream_key(42, StreamTag::coefficients);
  const auto a = normal4({7, 3, 1, 0}, key);
  const auto b = normal4({7, 3, 1, 0}, key);
  for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);

  const auto c = normal4({7, 3, 2, 0}, key);
  bool any_diff = false;
  for (int i = 0; i < 4; ++i) any_diff = any_diff || (a[i] != c[i]);
  CHECK(any_diff);

  const auto d = normal4({7, 3, 1, 0}, stream_key(42, StreamTag::monte_carlo));
  any_diff = false;
  for (int i = 0; i < 4; ++i) any_diff = any_diff || (a[i] != d[i]);
  CHECK(any_diff);
}

TEST_CASE("uniform4 stays in [0,1)") {
  const Key2 key = stream_key(1, StreamTag::scratch);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const auto u = uniform4({i, 0, 0, 0}, key);
    for (int k = 0; k < 4; ++k) {
      CHECK(u[k] >= 0.0);
      CHECK(u[k] < 1.0);
    }
  }
}

TEST_CASE("normal4 moments and lane independence") {
  const Key2 key = stream_key(2024, StreamTag::monte_carlo);
  const int n_blocks = 100000;
  double sum[4] = {0, 0, 0, 0}, sq[4] = {0, 0, 0, 0};
  double cross01 = 0, cross23 = 0, cross02 = 0;
  for (int i = 0; i < n_blocks; ++i) {
    const auto z = normal4({static_cast<std::uint64_t>(i), 0, 0, 0}, key);
    for (int k = 0; k < 4; ++k) {
      sum[k] += z[k];
      sq[k] += z[k] * z[k];
    }
    cross01 += z[0] * z[1];
    cross23 += z[2] * z[3];
    cross02 += z[0] * z[2];
  }
  // 5 sigma bands: sd(mean) = 1/sqrt(n), sd(var) ~ sqrt(2/n).
  const double tol_mean = 5.0 / std::sqrt(double(n_blocks));
  const double tol_var = 5.0 * std::sqrt(2.0 / n_blocks);
  for (int k = 0; k < 4; ++k) {
    const double mean = sum[k] / n_blocks;
    const double var = sq[k] / n_blocks - mean * mean;
    CHECK(std::abs(mean) < tol_mean);
    CHECK(std::abs(var - 1.0) < tol_var);
  }
  CHECK(std::abs(cross01 / n_blocks) < tol_mean);
  CHECK(std::abs(cross23 / n_blocks) < tol_mean);
  CHECK(std::abs(cross02 / n_blocks) < tol_mean);
}

TEST_SUITE_END();
