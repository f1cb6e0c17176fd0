#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgf/capacity.hpp"
#include "sgf/covariance.hpp"
#include "sgf/local_time.hpp"
#include "sgf/rng.hpp"
#include "sgf/spectrum.hpp"

using namespace sgf;

namespace {

CovarianceModel power_model(double alpha, int l_max) {
  return make_covariance_model(normalize(power_law_spectrum(alpha, l_max)));
}

Cap equator_cap(double radius) { return make_cap(make_point(0.5 * kPi, 0.0), radius); }

// Pair Monte Carlo for the energy of a tilted cap measure, sharing the
// tabulated kernel with energy() but none of its quadrature: radii are drawn
// by inversion of s^{tilt+1} with a sin(s)/s rejection, the longitude gap
// uniformly. Returns {mean, standard error}.
std::pair<double, double> pair_mc_energy(const CovarianceTable& table, double tilt,
                                         double r, long pairs, std::uint64_t seed) {
  const Key2 key = stream_key(seed, StreamTag::monte_carlo);
  const double inv = 1.0 / (tilt + 2.0);
  double sum = 0.0;
  double sum2 = 0.0;
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(pairs); ++i) {
    double s[2];
    for (int which = 0; which < 2; ++which) {
      double val = -1.0;
      for (std::uint64_t att = 0; att < 64 && val < 0.0; ++att) {
        const auto u = uniform4({i, att, static_cast<std::uint64_t>(which), 0}, key);
        const double cand = r * std::pow(u[0], inv);
        if (u[1] * cand <= std::sin(cand)) val = cand;
      }
      s[which] = val;
    }
    const auto u = uniform4({i, 99, 2, 0}, key);
    const double sd = std::sin(0.5 * (s[0] - s[1]));
    const double sp = std::sin(0.5 * kPi * u[0]);  // half gap uniform on [0, pi)
    const double hav = sd * sd + std::sin(s[0]) * std::sin(s[1]) * sp * sp;
    const double dist = 2.0 * std::asin(std::min(1.0, std::sqrt(hav)));
    const double s2 = table.variogram(dist);
    const double v = s2 * (1.0 - 0.25 * s2);
    const double phi = 1.0 / (2.0 * kPi * std::sqrt(v));
    sum += phi;
    sum2 += phi * phi;
  }
  const double n = static_cast<double>(pairs);
  const double mean = sum / n;
  return {mean, std::sqrt((sum2 / n - mean * mean) / n)};
}

double fit_kernel_slope(const CovarianceModel& m, int d, double lo, double hi, int n) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lt = std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1);
    const double lp = std::log(phi_kernel(m, std::exp(lt), d));
    sx += lt;
    sy += lp;
    sxx += lt * lt;
    sxy += lt * lp;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_SUITE("capacity") {

TEST_CASE("product kernel: identities, bounds, linear-covariance value") {
  const CovarianceModel lin = make_covariance_model(normalize(linear_covariance_spectrum(2001)));
  CHECK(std::abs(phi_kernel(lin, 0.5 * kPi, 1) - 1.0 / (2.0 * kPi)) < 1e-3);

  for (double alpha : {2.5, 3.5}) {
    const CovarianceModel m = power_model(alpha, 128);
    for (int i = 0; i < 40; ++i) {
      const double theta = std::min(
          kPi, std::exp(std::log(1e-3) + (std::log(kPi) - std::log(1e-3)) * i / 39.0));
      const double p = phi_kernel(m, theta, 1);
      const double c = covariance(m, theta);
      // [2 pi p]^{-2} recovers 1 - cov^2 (determinant of the pair covariance)
      const double det = std::pow(2.0 * kPi * p, -2.0);
      CHECK(std::abs(det - (1.0 - c * c)) < 1e-10);

      // product structure and the zero-level overload
      CHECK(phi_kernel(m, theta, 4) == doctest::Approx(std::pow(p, 4)).epsilon(1e-12));
      // the a-path forms 1 - cov^2 directly and loses a few digits to
      // cancellation at small theta; the zero-level overload does not
      CHECK(phi_kernel(m, theta, 3, Eigen::VectorXd::Zero(3)) ==
            doctest::Approx(phi_kernel(m, theta, 3)).epsilon(1e-9));
    }
  }

  // any level vector only reduces the density product
  const CovarianceModel m = power_model(3.0, 64);
  const NormalStream draws(19u, StreamTag::scratch);
  for (std::uint64_t k = 0; k < 25; ++k) {
    const auto b = draws.block(k);
    Eigen::VectorXd a(3);
    a << b[0], b[1], b[2];
    const double theta = 0.05 + 3.0 * static_cast<double>(k) / 25.0;
    CHECK(phi_kernel(m, theta, 3, a) <= phi_kernel(m, theta, 3) * (1.0 + 1e-12));
  }

  // the kernel sees only the distance, which is symmetric in its arguments
  const SpherePoint x = make_point(0.7, 1.3);
  const SpherePoint y = make_point(2.1, 5.9);
  CHECK(phi_kernel(m, geodesic_distance(x, y), 2) ==
        phi_kernel(m, geodesic_distance(y, x), 2));

  CHECK_THROWS_AS(phi_kernel(m, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(phi_kernel(m, 0.0, 1, Eigen::VectorXd::Zero(1)), std::invalid_argument);
  CHECK_THROWS_AS(phi_kernel(m, 3.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(phi_kernel(m, 0.5, 0), std::invalid_argument);
  CHECK_THROWS_AS(phi_kernel(m, 0.5, 2, Eigen::VectorXd::Zero(3)), std::invalid_argument);
  const CovarianceModel unnormalized =
      make_covariance_model(power_law_spectrum(2.5, 64));
  CHECK_THROWS_AS(phi_kernel(unnormalized, 0.5, 1), std::invalid_argument);
}

TEST_CASE("kernel small-angle blowup follows the variogram exponent") {
  // Needs degrees out to ~10/theta for the power law to be resolved at the
  // left end of the fit window.
  const double s25 = fit_kernel_slope(power_model(2.5, 32768), 2, 1e-3, 0.1, 25);
  CHECK(std::abs(s25 + 0.5) < 0.1);
  const double s30 = fit_kernel_slope(power_model(3.0, 32768), 3, 1e-3, 0.1, 25);
  CHECK(std::abs(s30 + 1.5) < 0.1);
}

TEST_CASE("energy matches an independent pair Monte Carlo") {
  struct Case {
    double alpha;
    double tilt;
  };
  for (const Case cs : {Case{2.5, 0.0}, Case{2.5, 2.0}, Case{3.9, 0.0}}) {
    CAPTURE(cs.alpha);
    CAPTURE(cs.tilt);
    const CovarianceModel m = power_model(cs.alpha, 256);
    const EnergyResult e = energy(m, 1, RadialMeasure{equator_cap(0.8), cs.tilt});
    REQUIRE(e.status == EnergyStatus::finite);
    const auto [mc, se] = pair_mc_energy(tabulate_covariance(m), cs.tilt, 0.8, 200000, 777u);
    CHECK(std::abs(e.value - mc) < 4.0 * se + 0.01 * e.value);
  }

  // the tabulated kernel energy() integrates agrees with the public kernel
  // away from the continuation region
  const CovarianceModel m = power_model(2.5, 256);
  const CovarianceTable table = tabulate_covariance(m);
  for (double theta : {0.05, 0.2, 0.7, 1.5, 3.0}) {
    const double s2 = table.variogram(theta);
    const double tab = 1.0 / (2.0 * kPi * std::sqrt(s2 * (1.0 - 0.25 * s2)));
    CHECK(tab == doctest::Approx(phi_kernel(m, theta, 1)).epsilon(1e-3));
  }
}

TEST_CASE("energy classification matches the hitting margin") {
  struct Cell {
    double alpha;
    int d;
    bool finite;
  };
  const Cell cells[] = {{2.5, 1, true},  {2.5, 7, true},  {2.5, 8, false},
                        {3.0, 4, false}, {3.5, 3, false}, {3.9, 2, true}};
  for (const Cell& cell : cells) {
    CAPTURE(cell.alpha);
    CAPTURE(cell.d);
    const CovarianceModel m = power_model(cell.alpha, 256);
    const EnergyResult e = energy(m, cell.d, RadialMeasure{equator_cap(0.8), 0.0});

    REQUIRE(e.increments.size() == 26);
    REQUIRE(e.trace.size() == 26);
    CHECK(e.trace.front() > 0.0);
    for (std::size_t k = 0; k + 1 < e.trace.size(); ++k) {
      CHECK(e.trace[k + 1] >= e.trace[k]);  // increments are nonnegative
    }
    CHECK(e.description.find("tilt") != std::string::npos);

    const std::size_t n = e.increments.size();
    if (cell.finite) {
      CHECK(e.status == EnergyStatus::finite);
      CHECK(std::isfinite(e.value));
      CHECK(e.value >= e.trace.back());  // geometric tail only adds
      // density product is bounded below by its independent-pair value
      CHECK(e.value >= std::pow(2.0 * kPi, -cell.d) * (1.0 - 1e-6));
      for (std::size_t k = n - 3; k < n; ++k) {
        CHECK(e.increments[k] / e.increments[k - 1] < 0.97);
      }
    } else {
      CHECK(e.status == EnergyStatus::divergent);
      CHECK(std::isinf(e.value));
      for (std::size_t k = n - 3; k < n; ++k) {
        CHECK(e.increments[k] / e.increments[k - 1] >= 0.97);
      }
    }
  }

  // deterministic quadrature: bitwise reproducible
  const CovarianceModel m = power_model(2.5, 256);
  const EnergyResult a = energy(m, 1, RadialMeasure{equator_cap(0.8), 1.0});
  const EnergyResult b = energy(m, 1, RadialMeasure{equator_cap(0.8), 1.0});
  CHECK(a.value == b.value);
  CHECK(a.increments == b.increments);
}

TEST_CASE("energy input validation and the discrete singularity") {
  const CovarianceModel m = power_model(2.5, 64);

  DiscreteMeasure point;
  point.points = {make_point(0.0, 0.0)};
  point.weights = Eigen::VectorXd::Ones(1);
  const EnergyResult e = energy(m, 1, point);
  CHECK(e.status == EnergyStatus::divergent);
  CHECK(std::isinf(e.value));
  CHECK(e.value > 0.0);
  CHECK(e.increments.empty());
  CHECK(e.description == "discrete(n=1)");

  DiscreteMeasure two;
  two.points = {make_point(0.5, 0.0), make_point(1.5, 2.0)};
  two.weights = Eigen::VectorXd::Constant(2, 0.5);
  CHECK(energy(m, 3, two).status == EnergyStatus::divergent);

  DiscreteMeasure bad = two;
  bad.weights = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  CHECK_THROWS_AS(energy(m, 1, bad), std::invalid_argument);
  bad.weights = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(energy(m, 1, bad), std::invalid_argument);
  bad.weights = Eigen::VectorXd::Constant(2, 0.7);
  CHECK_THROWS_AS(energy(m, 1, bad), std::invalid_argument);
  bad.points.clear();
  bad.weights = Eigen::VectorXd();
  CHECK_THROWS_AS(energy(m, 1, bad), std::invalid_argument);
  CHECK_THROWS_AS(energy(m, 0, point), std::invalid_argument);

  const RadialMeasure uniform{equator_cap(0.8), 0.0};
  CHECK_THROWS_AS(energy(m, 0, uniform), std::invalid_argument);
  CHECK_THROWS_AS(energy(m, 1, RadialMeasure{equator_cap(0.8), -1.0}),
                  std::invalid_argument);

  EnergySpec spec;
  spec.far_nodes = 4;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.shells = 4;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.shells = 100;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.local_split = 0.3;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.local_split = 0.0;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.ratio_threshold = 0.4;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
  spec = {};
  spec.ratio_threshold = 1.5;
  CHECK_THROWS_AS(energy(m, 1, uniform, spec), std::invalid_argument);
}

TEST_CASE("capacity: family minimum, positivity, cap monotonicity") {
  const CovarianceModel m25 = power_model(2.5, 256);

  double prev = 0.0;
  for (double r : {0.2, 0.4, 0.8, 1.6}) {
    CAPTURE(r);
    const CapacityEstimate est = capacity_estimate(m25, 1, equator_cap(r));
    REQUIRE(est.energies.size() == 4);
    CHECK(est.tilts == std::vector<double>{0.0, 1.0, 2.0, 4.0});

    // value is exactly the reciprocal of the best finite family energy
    double best = std::numeric_limits<double>::infinity();
    double best_tilt = -1.0;
    for (std::size_t k = 0; k < est.energies.size(); ++k) {
      if (est.energies[k].status == EnergyStatus::finite &&
          est.energies[k].value < best) {
        best = est.energies[k].value;
        best_tilt = est.tilts[k];
      }
    }
    CHECK(est.value == 1.0 / best);
    CHECK(est.best_tilt == best_tilt);

    CHECK(est.value > prev);  // larger caps carry more capacity
    prev = est.value;
  }

  const CovarianceModel m30 = power_model(3.0, 256);
  CHECK(capacity_estimate(m30, 2, equator_cap(0.4)).value <
        capacity_estimate(m30, 2, equator_cap(0.8)).value);

  CHECK(capacity_estimate(m25, 7, equator_cap(0.8)).value > 0.0);
  const CapacityEstimate zero = capacity_estimate(m25, 8, equator_cap(0.8));
  CHECK(zero.value == 0.0);
  CHECK(std::isnan(zero.best_tilt));
  for (const EnergyResult& e : zero.energies) {
    CHECK(e.status == EnergyStatus::divergent);  // tilt does not change the exponent
  }
  CHECK(capacity_estimate(m30, 4, equator_cap(0.8)).value == 0.0);
  CHECK(capacity_estimate(power_model(3.9, 256), 2, equator_cap(0.8)).value > 0.0);

  CHECK_THROWS_AS(capacity_estimate(m25, 1, equator_cap(0.8), {}), std::invalid_argument);
}

TEST_CASE("integrability: analytic exponent and numeric refinement agree") {
  const IntegrabilityResult flat = integrability_test(3.0, 2, 1.0);
  CHECK(flat.exponent == -1.0);
  CHECK(flat.integrable);

  const IntegrabilityResult edge = integrability_test(3.0, 4, 1.0);
  CHECK(edge.exponent == -2.0);
  CHECK(!edge.integrable);

  CHECK(integrability_test(2.5, 7, 1.0).integrable);
  CHECK(!integrability_test(2.5, 8, 1.0).integrable);
  CHECK(integrability_test(3.9, 2, 1.0).integrable);

  for (double alpha : {2.2, 2.5, 3.0, 3.5, 3.9}) {
    for (int d = 1; d <= 12; ++d) {
      CAPTURE(alpha);
      CAPTURE(d);
      const IntegrabilityResult res = integrability_test(alpha, d, 0.8);
      CHECK(res.exponent == d * (1.0 - 0.5 * alpha));
      CHECK(res.integrable == (4.0 - (alpha - 2.0) * d > 0.0));
      CHECK(res.increments.size() == 30);
      for (double inc : res.increments) CHECK(inc > 0.0);
    }
  }

  CHECK_THROWS_AS(integrability_test(2.0, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrability_test(4.0, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrability_test(3.0, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(integrability_test(3.0, 2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(integrability_test(3.0, 2, 3.5), std::invalid_argument);
  CHECK_NOTHROW(integrability_test(3.0, 2, kPi));
}

TEST_CASE("hitting consistency grid is clean") {
  const std::vector<double> alphas{2.2, 2.5, 3.0, 3.5, 3.9};
  const std::vector<int> ds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
  const auto rows = consistency_grid(alphas, ds, 0.8, 256);
  REQUIRE(rows.size() == 60);
  for (const ConsistencyRow& row : rows) {
    CAPTURE(row.alpha);
    CAPTURE(row.d);
    CHECK(row.margin == 4.0 - (row.alpha - 2.0) * row.d);
    CHECK(row.criterion == (row.margin > 0.0));
    CHECK(row.integrable == row.criterion);
    CHECK(row.capacity_positive == row.criterion);
    CHECK(row.consistent);
  }

  const auto parsed = nlohmann::json::parse(consistency_grid_to_json(rows));
  REQUIRE(parsed.is_array());
  REQUIRE(parsed.size() == 60);
  CHECK(parsed[0]["alpha"].get<double>() == 2.2);
  CHECK(parsed[0]["d"].get<int>() == 1);
  CHECK(parsed[0]["consistent"].get<bool>());
  CHECK(parsed[59]["alpha"].get<double>() == 3.9);
  CHECK(parsed[59]["d"].get<int>() == 12);

  const auto dir = std::filesystem::temp_directory_path();
  const auto jpath = (dir / "sgf_consistency.json").string();
  save_consistency_grid_json(rows, jpath);
  std::ifstream jin(jpath);
  nlohmann::json round;
  jin >> round;
  CHECK(round.size() == 60);
  std::filesystem::remove(jpath);

  CHECK_THROWS_AS(consistency_grid({}, ds, 0.8, 256), std::invalid_argument);
  CHECK_THROWS_AS(consistency_grid(alphas, {}, 0.8, 256), std::invalid_argument);
  CHECK_THROWS_AS(consistency_grid(alphas, ds, 0.0, 256), std::invalid_argument);
}

TEST_CASE("hitting frequencies: supercritical level and level far away") {
  const PowerSpectrum s = normalize(power_law_spectrum(2.5, 64));
  const IsoLatGrid grid = make_grid(48, 130);
  const Cap hemi = make_cap(make_point(0.5 * kPi, 1.0), 0.5 * kPi);
  const auto sched = geometric_eps_schedule(0.4, 4);
  REQUIRE(sched.size() == 4);
  CHECK(sched[0] == 0.4);
  CHECK(sched[3] == doctest::Approx(0.05).epsilon(1e-12));

  const auto tab =
      hitting_probability_mc(s, 1, hemi, Eigen::VectorXd::Zero(1), sched, 120, grid, 4242u);
  CHECK(tab.replicates == 120);
  CHECK(tab.seed == 4242u);
  REQUIRE(tab.rows.size() == 4);
  for (std::size_t k = 0; k < tab.rows.size(); ++k) {
    const HittingFrequencyRow& row = tab.rows[k];
    CHECK(row.eps == sched[k]);
    CHECK(row.freq == static_cast<double>(row.hits) / 120.0);
    CHECK(row.freq >= 0.9);  // a zero crossing meets a hemisphere essentially always
    CHECK(row.ci_lo <= row.freq);
    CHECK(row.freq <= row.ci_hi);
    CHECK(row.ci_lo >= 0.0);
    CHECK(row.ci_hi <= 1.0);
    CHECK(row.ci_lo < row.ci_hi);
  }
  CHECK(tab.trend == HittingTrend::stable);

  const auto far = hitting_probability_mc(s, 1, hemi, Eigen::VectorXd::Constant(1, 50.0),
                                          sched, 120, grid, 4242u);
  for (const HittingFrequencyRow& row : far.rows) {
    CHECK(row.hits == 0);
    CHECK(row.ci_lo == 0.0);
  }
  CHECK(far.trend == HittingTrend::collapsing);

  const auto again =
      hitting_probability_mc(s, 1, hemi, Eigen::VectorXd::Zero(1), sched, 120, grid, 4242u);
  for (std::size_t k = 0; k < tab.rows.size(); ++k) {
    CHECK(again.rows[k].hits == tab.rows[k].hits);
  }
}

TEST_CASE("hitting frequencies are nonincreasing in the number of components") {
  const PowerSpectrum s = normalize(power_law_spectrum(2.5, 64));
  const IsoLatGrid grid = make_grid(48, 130);
  const Cap hemi = make_cap(make_point(0.5 * kPi, 1.0), 0.5 * kPi);
  const auto sched = geometric_eps_schedule(0.4, 4);

  // component k of the replicate draw does not depend on d, so adding
  // components can only remove hits, replicate by replicate
  std::vector<int> prev;
  HittingTrend last_trend = HittingTrend::stable;
  for (int d : {1, 2, 4, 8}) {
    CAPTURE(d);
    const auto tab =
        hitting_probability_mc(s, d, hemi, Eigen::VectorXd::Zero(d), sched, 120, grid, 991u);
    if (!prev.empty()) {
      for (std::size_t k = 0; k < tab.rows.size(); ++k) {
        CHECK(tab.rows[k].hits <= prev[k]);
      }
    }
    prev.clear();
    for (const HittingFrequencyRow& row : tab.rows) prev.push_back(row.hits);
    last_trend = tab.trend;
  }
  CHECK(last_trend == HittingTrend::collapsing);  // d = 8 barely hits at any eps
}

TEST_CASE("hitting frequency validation") {
  const PowerSpectrum s = normalize(power_law_spectrum(2.5, 64));
  const IsoLatGrid grid = make_grid(48, 130);
  const Cap hemi = make_cap(make_point(0.5 * kPi, 1.0), 0.5 * kPi);
  const auto sched = geometric_eps_schedule(0.4, 4);
  const Eigen::VectorXd zero1 = Eigen::VectorXd::Zero(1);

  CHECK_THROWS_AS(hitting_probability_mc(s, 1, hemi, zero1, sched, 99, grid, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(hitting_probability_mc(s, 1, hemi, zero1, {}, 120, grid, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(hitting_probability_mc(s, 1, hemi, zero1, {0.2, -0.1}, 120, grid, 1u),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      hitting_probability_mc(s, 2, hemi, Eigen::VectorXd::Zero(1), sched, 120, grid, 1u),
      std::invalid_argument);
  CHECK_THROWS_AS(hitting_probability_mc(s, 0, hemi, zero1, sched, 120, grid, 1u),
                  std::invalid_argument);

  // eps below 0.05 w(h) cannot be resolved for d >= 2 but is fine for d = 1,
  // where sign changes pin the level exactly
  const double floor2 = 0.05 * w_gauge(std::min(resolution_scale(grid), 0.3), s.alpha);
  REQUIRE(0.02 < floor2);
  CHECK_THROWS_AS(hitting_probability_mc(s, 2, hemi, Eigen::VectorXd::Zero(2), {0.02},
                                         120, grid, 1u),
                  std::invalid_argument);
  CHECK_NOTHROW(hitting_probability_mc(s, 1, hemi, zero1, {0.02}, 100, grid, 1u));

  CHECK_THROWS_AS(geometric_eps_schedule(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(geometric_eps_schedule(0.4, 0), std::invalid_argument);
  CHECK_THROWS_AS(geometric_eps_schedule(0.4, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(geometric_eps_schedule(0.4, 4, 0.0), std::invalid_argument);
  const auto tight = geometric_eps_schedule(1.0, 3, 0.1);
  REQUIRE(tight.size() == 3);
  CHECK(tight[0] == 1.0);
  CHECK(tight[1] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(tight[2] == doctest::Approx(0.01).epsilon(1e-15));
}

TEST_CASE("csv exports") {
  const auto dir = std::filesystem::temp_directory_path();

  const CovarianceModel m = power_model(2.5, 256);
  const EnergyResult e = energy(m, 1, RadialMeasure{equator_cap(0.8), 0.0});
  const auto epath = (dir / "sgf_energy_trace.csv").string();
  save_energy_trace_csv(e, epath);
  {
    std::ifstream in(epath);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "shell,increment,cumulative");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == e.increments.size());
  }
  std::filesystem::remove(epath);

  const PowerSpectrum s = normalize(power_law_spectrum(2.5, 32));
  const auto tab = hitting_probability_mc(s, 1, make_cap(make_point(0.5 * kPi, 1.0), 1.0),
                                          Eigen::VectorXd::Zero(1),
                                          geometric_eps_schedule(0.3, 3), 100,
                                          make_grid(32, 66), 7u);
  const auto fpath = (dir / "sgf_hitting_freq.csv").string();
  save_frequency_table_csv(tab, fpath);
  {
    std::ifstream in(fpath);
    std::string header, line;
    std::getline(in, header);
    CHECK(header == "eps,hits,replicates,freq,ci_lo,ci_hi");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      if (!line.empty()) ++rows;
    }
    CHECK(rows == tab.rows.size());
  }
  std::filesystem::remove(fpath);
}

}  // TEST_SUITE
