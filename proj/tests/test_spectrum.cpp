#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>

#include "doctest.h"

#include "sgf/harmonics.hpp"
#include "sgf/rng.hpp"
#include "sgf/spectrum.hpp"
#include "sgf/sphere_geom.hpp"

using namespace sgf;

namespace {

// Independent closed form for the odd-kernel series: (pi/2) [(2l-1)!!/(2l+2)!!]^2,
// evaluated through lgamma. Derived from the Legendre expansion of arccos.
double series_closed_form(int ell) {
  const double lr = std::lgamma(2.0 * ell + 1.0) - (2.0 * ell + 1.0) * std::log(2.0) -
                    std::lgamma(ell + 1.0) - std::lgamma(ell + 2.0);
  return 0.5 * kPi * std::exp(2.0 * lr);
}

// Ring quadrature for the cap-overlap area: integrate the azimuthal width of
// cap 2 over rings of cap 1. Simpson on a uniform grid in the ring angle.
double lens_area_quadrature(double theta, double r, int n) {
  auto width = [&](double a) {
    const double sa = std::sin(a) * std::sin(theta);
    double hw;
    if (sa < 1e-300) {
      hw = (a + theta < r || theta < r) && std::cos(a) * std::cos(theta) > std::cos(r) ? kPi : 0.0;
      if (a < 1e-300) hw = theta < r ? kPi : 0.0;
    } else {
      hw = std::acos(std::clamp((std::cos(r) - std::cos(a) * std::cos(theta)) / sa, -1.0, 1.0));
    }
    return 2.0 * hw * std::sin(a);
  };
  const double h = r / n;
  double acc = width(0.0) + width(r);
  for (int i = 1; i < n; ++i) acc += width(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_SUITE("spectrum") {

TEST_CASE("power law construction and declared bounds") {
  const PowerSpectrum s3 = power_law_spectrum(3.0, 64);
  CHECK(s3.c[0] == 0.0);
  CHECK(s3.c[2] == 0.125);
  CHECK(s3.alpha == 3.0);
  CHECK(s3.k0 == 1.0);
  CHECK(s3.kind == SpectrumKind::power_law);
  CHECK(verify_power_law_bounds(s3));
  CHECK(admissible(s3));

  const PowerSpectrum s25 = power_law_spectrum(2.5, 128);
  for (int l = 1; l <= 128; l += 13) {
    CHECK(std::pow(static_cast<double>(l), 2.5) * s25.c[l] == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Any exponent above 2 constructs; admissibility additionally needs < 4.
  CHECK(admissible(power_law_spectrum(2.01, 16)));
  CHECK(admissible(power_law_spectrum(3.99, 16)));
  CHECK_FALSE(admissible(power_law_spectrum(4.5, 16)));

  CHECK_THROWS_AS(power_law_spectrum(2.0, 16), std::invalid_argument);
  CHECK_THROWS_AS(power_law_spectrum(1.5, 16), std::invalid_argument);
  CHECK_THROWS_AS(power_law_spectrum(3.0, 0), std::invalid_argument);

  // Modulation escaping the declared band is rejected.
  CHECK_THROWS_AS(power_law_spectrum(3.0, 1.5, [](int) { return 2.0; }, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(power_law_spectrum(3.0, 1.5, [](int l) { return l == 7 ? 0.1 : 1.0; }, 16),
                  std::invalid_argument);
  const PowerSpectrum mod =
      power_law_spectrum(3.0, 2.0, [](int l) { return l % 2 ? 1.8 : 0.6; }, 64);
  CHECK(verify_power_law_bounds(mod));
}

TEST_CASE("normalization is exact, idempotent, and scale invariant") {
  const PowerSpectrum s = power_law_spectrum(3.0, 1000);
  const PowerSpectrum n1 = normalize(s);
  CHECK(n1.normalized);
  CHECK(spectrum_variance_sum(n1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(verify_power_law_bounds(n1));

  const PowerSpectrum n2 = normalize(n1);
  for (int l = 0; l <= 1000; l += 97) {
    CHECK(n2.c[l] == doctest::Approx(n1.c[l]).epsilon(1e-14));
  }

  PowerSpectrum scaled = s;
  scaled.c *= 7.0;
  const PowerSpectrum n7 = normalize(scaled);
  for (int l = 1; l <= 1000; l += 59) {
    CHECK(n7.c[l] == doctest::Approx(n1.c[l]).epsilon(1e-14));
  }

  PowerSpectrum zero;
  zero.c.setZero(8);
  CHECK_THROWS_AS(normalize(zero), std::invalid_argument);
}

TEST_CASE("hurst model") {
  const PowerSpectrum s = hurst_spectrum(0.3, 256);
  CHECK(s.alpha == doctest::Approx(2.6).epsilon(1e-15));
  CHECK_FALSE(s.model_warning);
  CHECK(admissible(s));
  for (int l = 1; l <= 256; l += 31) {
    CHECK(s.c[l] == doctest::Approx(std::pow(static_cast<double>(l), -2.6)).epsilon(1e-14));
  }

  const PowerSpectrum w = hurst_spectrum(0.7, 64);
  CHECK(w.alpha == doctest::Approx(3.4).epsilon(1e-15));
  CHECK(w.model_warning);
  CHECK(w.kind == SpectrumKind::hurst);

  CHECK_THROWS_AS(hurst_spectrum(0.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(hurst_spectrum(-0.2, 64), std::invalid_argument);
  CHECK_THROWS_AS(hurst_spectrum(1.0, 64), std::invalid_argument);
  CHECK_THROWS_AS(hurst_spectrum(1.3, 64), std::invalid_argument);

  // Optional odd-degree additions: zero at even degrees and at degree 1,
  // the documented profile at odd degrees.
  const PowerSpectrum plain = hurst_spectrum(0.3, 31);
  const PowerSpectrum corr = hurst_spectrum(0.3, 31, true);
  CHECK(corr.alpha == plain.alpha);
  for (int l = 1; l <= 31; ++l) {
    const double d = corr.c[l] - plain.c[l];
    if (l % 2 == 0 || l == 1) {
      CHECK(d == 0.0);
    } else {
      const double want = std::pow(static_cast<double>(l), -2.0) * std::pow(2.0 * kPi, -l);
      CHECK(d == doctest::Approx(want).epsilon(1e-12));
    }
  }
  CHECK(verify_power_law_bounds(corr));

  // Level-set nonemptiness arithmetic: 4 - (alpha-2) d > 0 iff h d < 2.
  for (int d = 1; d <= 8; ++d) {
    const double h = 0.3;
    const bool lhs = 4.0 - (2.0 * h + 2.0 - 2.0) * d > 0.0;
    const bool rhs = h * d < 2.0;
    CHECK(lhs == rhs);
  }
}

TEST_CASE("odd kernel series against the closed form") {
  for (int ell : {2, 3, 5, 10}) {
    const double got = linear_covariance_series(ell);
    CHECK(got == doctest::Approx(series_closed_form(ell)).epsilon(1e-7));
  }

  // Partial sums are monotone in the term count.
  double prev = 0.0;
  for (std::int64_t n : {1, 2, 4, 8, 32, 128, 512, 2048, 8192}) {
    const double v = linear_covariance_partial_sum(4, n);
    CHECK(v > prev);
    prev = v;
  }

  CHECK_THROWS_AS(linear_covariance_series(1), std::invalid_argument);
  CHECK_THROWS_AS(linear_covariance_series(0), std::invalid_argument);
  // At ell = 50 the terms are still growing after 1000 of them.
  CHECK_THROWS_AS(linear_covariance_series(50, 1000), std::runtime_error);
}

TEST_CASE("linear covariance spectrum reproduces its kernel") {
  const int l_max = 2001;
  const PowerSpectrum s = linear_covariance_spectrum(l_max);
  CHECK(s.c[0] == 0.0);
  CHECK(s.c[1] == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(s.c[3] == doctest::Approx(kPi / 16.0).epsilon(1e-15));
  for (int l = 2; l <= 32; l += 2) CHECK(s.c[l] == 0.0);
  CHECK(s.alpha == 1.0);
  CHECK_FALSE(admissible(s));

  // The coefficient at degree 2k+1 is 8 times the series value at k.
  for (int k : {2, 5, 10}) {
    CHECK(s.c[2 * k + 1] == doctest::Approx(8.0 * linear_covariance_series(k)).epsilon(1e-7));
  }

  // Schoenberg sum vs 1 - (2/pi) theta at interior angles.
  for (double theta : {0.05, 0.3, 1.0, 2.0, kPi - 0.05}) {
    const LegendreTable tab = legendre_table(l_max, std::cos(theta));
    double acc = 0.0;
    for (int l = l_max; l >= 0; --l) acc += s.c[l] * (2.0 * l + 1.0) * tab.values[l];
    acc /= 4.0 * kPi;
    CHECK(std::abs(acc - (1.0 - 2.0 * theta / kPi)) <= 5e-3);
  }

  const double var = spectrum_variance_sum(s);
  CHECK(var > 1.0 - 1e-3);
  CHECK(var <= 1.0 + 1e-12);
}

TEST_CASE("cap overlap area") {
  CHECK(cap_overlap_area(0.4, 0.2) == 0.0);
  CHECK(cap_overlap_area(0.9, 0.2) == 0.0);
  CHECK(cap_overlap_area(0.0, 0.35) == doctest::Approx(cap_area(0.35)).epsilon(1e-12));

  for (double r : {0.2, 0.7, 1.3}) {
    for (int i = 1; i <= 8; ++i) {
      const double theta = 2.0 * r * i / 9.0;
      const double got = cap_overlap_area(theta, r);
      const double want = lens_area_quadrature(theta, r, 20000);
      CHECK(std::abs(got - want) <= 1e-6 * (1.0 + want));
    }
  }

  // Non-increasing in separation.
  double prev = cap_overlap_area(0.0, 0.5);
  for (int i = 1; i <= 50; ++i) {
    const double v = cap_overlap_area(1.0 * i / 50.0, 0.5);
    CHECK(v <= prev + 1e-15);
    prev = v;
  }

  // Monte Carlo cross-check at theta = r = 0.2.
  {
    const double r = 0.2, theta = 0.2;
    const Key2 key = stream_key(20240817u, StreamTag::monte_carlo);
    const double cr = std::cos(r), ct = std::cos(theta), st = std::sin(theta);
    std::int64_t hits = 0;
    const std::int64_t blocks = 3000000;
    for (std::int64_t b = 0; b < blocks; ++b) {
      const auto u4 = uniform4({static_cast<std::uint64_t>(b), 0, 0, 0}, key);
      for (int p = 0; p < 2; ++p) {
        const double z = 1.0 - 2.0 * u4[2 * p];
        if (z <= cr) continue;
        const double sxy = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double wv = sxy * std::cos(2.0 * kPi * u4[2 * p + 1]) * st + z * ct;
        if (wv > cr) ++hits;
      }
    }
    const double est = 4.0 * kPi * static_cast<double>(hits) / (2.0 * blocks);
    CHECK(std::abs(est - cap_overlap_area(theta, r)) <= 1e-3);
  }

  CHECK_THROWS_AS(cap_overlap_area(0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(cap_overlap_area(0.1, kPi / 2), std::invalid_argument);
  CHECK_THROWS_AS(cap_overlap_area(-0.1, 0.3), std::invalid_argument);
  CHECK_THROWS_AS(cap_overlap_area(kPi + 0.1, 0.3), std::invalid_argument);
}

TEST_CASE("head increment sum") {
  const PowerSpectrum s = power_law_spectrum(3.0, 2048);

  for (double theta : {0.01, 0.1, 0.5}) {
    const double want = 3.0 * (1.0 - std::cos(theta)) / (4.0 * kPi);
    CHECK(head_increment_sum(s, 1, theta) == doctest::Approx(want).epsilon(1e-14));
  }

  CHECK(head_increment_sum(s, 512, 1e-9) <= 1e-17);

  // value / (L^{4-alpha} theta^2) stays bounded while L <= 1/theta.
  const double theta = 1e-3;
  double lo = 1e300, hi = 0.0;
  for (int L = 4; L <= 1000; L *= 2) {
    const double ratio = head_increment_sum(s, L, theta) / (static_cast<double>(L) * theta * theta);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 3.0);

  CHECK_THROWS_AS(head_increment_sum(s, 0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(head_increment_sum(s, 4096, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(head_increment_sum(s, 4, 0.0), std::invalid_argument);
}

TEST_CASE("tail sum bound") {
  PowerSpectrum flat;
  flat.c.setConstant(9, 0.1);
  flat.kind = SpectrumKind::custom;
  CHECK(tail_sum_bound(flat, 20) == 0.0);

  const PowerSpectrum s = power_law_spectrum(3.0, 4096);
  double lo = 1e300, hi = 0.0;
  double prev = -1.0;
  for (int U = 4; U <= 256; U *= 2) {
    const double v = tail_sum_bound(s, U);
    const double scaled = v * std::pow(static_cast<double>(U), s.alpha - 2.0);
    lo = std::min(lo, scaled);
    hi = std::max(hi, scaled);
    if (prev > 0.0) {
      // Doubling the cut divides the bound by about 2^(alpha-2).
      CHECK(prev / v == doctest::Approx(2.0).epsilon(0.25));
    }
    prev = v;
  }
  CHECK(hi / lo < 4.0);

  CHECK_THROWS_AS(tail_sum_bound(s, 1), std::invalid_argument);
}

TEST_CASE("csv round trip and hashing") {
  const PowerSpectrum s = normalize(hurst_spectrum(0.3, 40, true));
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "sgf_spectrum_roundtrip.csv").string();
  save_spectrum_csv(s, path);

  const PowerSpectrum r = load_spectrum_csv(path);
  REQUIRE(r.l_max() == s.l_max());
  for (int l = 0; l <= s.l_max(); ++l) CHECK(r.c[l] == s.c[l]);
  CHECK(r.alpha == s.alpha);
  CHECK(r.k0 == s.k0);
  CHECK(r.kind == s.kind);
  CHECK(r.normalized == s.normalized);
  CHECK(spectrum_hash(r) == spectrum_hash(s));

  PowerSpectrum bumped = s;
  bumped.c[3] += 1e-10;
  CHECK(spectrum_hash(bumped) != spectrum_hash(s));

  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
  CHECK_THROWS_AS(load_spectrum_csv(path), std::runtime_error);
}

}  // TEST_SUITE
