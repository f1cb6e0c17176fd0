#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "doctest.h"

#include "sgf/covariance.hpp"
#include "sgf/rng.hpp"
#include "sgf/spectrum.hpp"

using namespace sgf;

namespace {

Eigen::Vector3d unit_from_normals(const std::array<double, 4>& z) {
  Eigen::Vector3d v{z[0], z[1], z[2]};
  return v.normalized();
}

// Random cluster: a base point plus n conditioners at distances in
// (0.2, 1.0] * scale along random tangent directions.
struct Cluster {
  SpherePoint x;
  std::vector<SpherePoint> cond;
};

Cluster make_cluster(const NormalStream& ns, std::uint64_t id, double scale, int n) {
  Cluster cl;
  const Eigen::Vector3d bx = unit_from_normals(ns.block(id, 0));
  cl.x = point_from_unit(bx);
  for (int k = 1; k <= n; ++k) {
    const Eigen::Vector3d g = unit_from_normals(ns.block(id, static_cast<std::uint64_t>(k)));
    Eigen::Vector3d t = g - g.dot(bx) * bx;
    if (t.norm() < 1e-12) t = bx.unitOrthogonal();
    t.normalize();
    const auto u = uniform4({id, static_cast<std::uint64_t>(k), 7, 0},
                            stream_key(99, StreamTag::scratch));
    const double dist = scale * (0.2 + 0.8 * u[0]);
    cl.cond.push_back(point_from_unit(std::cos(dist) * bx + std::sin(dist) * t));
  }
  return cl;
}

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("schoenberg sum basics") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 2048)));
  CHECK(covariance(m, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double theta : {0.01, 0.3, 1.0, 2.5, kPi}) {
    const double v = covariance(m, theta);
    CHECK(std::abs(v) <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(covariance(m, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(covariance(m, kPi + 0.1), std::invalid_argument);

  const CovarianceModel lin = make_covariance_model(normalize(linear_covariance_spectrum(2001)));
  CHECK(std::abs(covariance(lin, kPi / 2)) <= 2e-3);
  CHECK(std::abs(covariance(lin, kPi) + 1.0) <= 5e-3);
}

TEST_CASE("variogram scale behavior") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 16384)));
  CHECK(variogram(m, 0.0) <= 1e-12);

  // sigma^2(theta)/theta bounded above and below on [1e-3, 1e-1] for alpha 3.
  double lo = 1e300, hi = 0.0;
  for (int i = 0; i <= 20; ++i) {
    const double theta = 1e-3 * std::pow(100.0, i / 20.0);
    const double r = variogram(m, theta) / theta;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(lo > 0.0);
  CHECK(hi / lo < 3.0);

  // Log-log slope over the same window recovers alpha - 2.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = 25;
  for (int i = 0; i < n; ++i) {
    const double theta = 1e-3 * std::pow(100.0, static_cast<double>(i) / (n - 1));
    const double x = std::log(theta), y = std::log(variogram(m, theta));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("rho gauge") {
  CHECK(rho_alpha(0.0, 3.0) == 0.0);
  CHECK(rho_alpha(0.37, 4.0) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(rho_alpha(0.04, 3.0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS_AS(rho_alpha(0.1, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(rho_alpha(-0.1, 3.0), std::invalid_argument);
}

TEST_CASE("conditional variance") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 4096)));
  const SpherePoint x = make_point(1.1, 0.4);

  CHECK(conditional_variance(m, x, {x}).value <= 1e-8);

  // Single conditioner matches the 2x2 closed form.
  for (double theta : {0.01, 0.3, 1.3}) {
    const SpherePoint y = make_point(1.1 + theta, 0.4);
    const double cov = covariance(m, geodesic_distance(x, y));
    const double want = covariance(m, 0.0) - cov * cov / covariance(m, 0.0);
    CHECK(conditional_variance(m, x, {y}).value == doctest::Approx(want).epsilon(1e-12));
  }

  // Adding conditioners never increases the value.
  const NormalStream ns(7, StreamTag::scratch);
  std::vector<SpherePoint> set;
  double prev = covariance(m, 0.0);
  for (int k = 0; k < 6; ++k) {
    set.push_back(point_from_unit(unit_from_normals(ns.block(400 + k, 0))));
    const double v = conditional_variance(m, x, set).value;
    CHECK(v <= prev + 1e-12);
    prev = v;
  }

  // Exact duplicates force the ridge.
  const SpherePoint y = make_point(0.7, 0.2);
  const ConditionResult r = conditional_variance(m, x, {y, y});
  CHECK(r.regularized);
  CHECK(r.value >= 0.0);
  CHECK(r.value <= 1.0);

  CHECK_THROWS_AS(conditional_variance(m, x, {}), std::invalid_argument);
}

TEST_CASE("slnd ratio") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 32768)));
  const SpherePoint x = make_point(0.9, 2.0);

  // Far single conditioner: closed form.
  {
    const SpherePoint y = make_point(2.2, 2.0);
    const double theta = geodesic_distance(x, y);
    const double cov = covariance(m, theta);
    const double want = (covariance(m, 0.0) - cov * cov / covariance(m, 0.0)) / theta;
    CHECK(slnd_ratio(m, x, {y}).value == doctest::Approx(want).epsilon(1e-10));
  }

  CHECK(slnd_ratio(m, x, {x}).value == 0.0);

  // Randomized clusters: the ratio stays bounded away from zero, with
  // per-scale floors of comparable size.
  const NormalStream ns(2024, StreamTag::scratch);
  double floor_min = 1e300, floor_max = 0.0;
  std::uint64_t id = 0;
  for (double scale : {1e-3, 1e-2, 1e-1}) {
    double fl = 1e300;
    for (int cfg = 0; cfg < 40; ++cfg) {
      const Cluster cl = make_cluster(ns, ++id, scale, 5);
      const double v = slnd_ratio(m, cl.x, cl.cond).value;
      CHECK(v > 0.0);
      fl = std::min(fl, v);
    }
    floor_min = std::min(floor_min, fl);
    floor_max = std::max(floor_max, fl);
  }
  CHECK(floor_min > 0.0);
  CHECK(floor_max / floor_min < 3.0);
}

TEST_CASE("joint density") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 2048)));

  // [2 pi p(theta; 0)]^-2 == 1 - cov^2.
  for (double theta : {0.05, 0.3, 1.0, 2.7}) {
    const double p0 = joint_density(m, theta, {0.0, 0.0});
    const double lhs = 1.0 / ((2.0 * kPi * p0) * (2.0 * kPi * p0));
    const double cov = covariance(m, theta);
    CHECK(lhs == doctest::Approx(1.0 - cov * cov).epsilon(1e-10));
  }

  // Mass integrates to 1.
  {
    const double theta = 0.2;
    const int n = 200;
    const double a = 8.0, h = 2.0 * a / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double wi = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      for (int j = 0; j <= n; ++j) {
        const double wj = (j == 0 || j == n) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        acc += wi * wj * joint_density(m, theta, {-a + i * h, -a + j * h});
      }
    }
    acc *= h * h / 9.0;
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
  }

  // Uncorrelated at right angles under the linear-covariance model.
  const CovarianceModel lin = make_covariance_model(normalize(linear_covariance_spectrum(2001)));
  CHECK(std::abs(joint_density(lin, kPi / 2, {0.0, 0.0}) - 1.0 / (2.0 * kPi)) <= 1e-3);

  CHECK_THROWS_AS(joint_density(m, 0.0, {0.0, 0.0}), std::invalid_argument);
  PowerSpectrum raw = power_law_spectrum(3.0, 64);  // unnormalized
  CHECK_THROWS_AS(joint_density(make_covariance_model(raw), 0.3, {0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("truncation error stays under the reported tail bound") {
  const PowerSpectrum full = power_law_spectrum(2.5, 4096);
  PowerSpectrum trunc = full;
  trunc.c = full.c.head(513).eval();
  const CovarianceModel mf = make_covariance_model(full);
  const CovarianceModel mt = make_covariance_model(trunc);
  const double bound = covariance_tail_bound(mt);
  CHECK(bound > 0.0);
  for (double theta : {0.0, 0.01, 0.1, 1.0, 2.0, kPi}) {
    CHECK(std::abs(covariance(mf, theta) - covariance(mt, theta)) <= bound);
  }
}

TEST_CASE("covariance table") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(2.5, 4096)));
  const CovarianceTable tab = tabulate_covariance(m, 0.0, 512, 512);
  CHECK(tab.theta_c == doctest::Approx(10.0 / 4096).epsilon(1e-15));

  for (double theta : {3e-3, 0.01, 0.05, 0.2, 0.45}) {
    CHECK(tab.variogram(theta) == doctest::Approx(variogram(m, theta)).epsilon(1e-4));
    CHECK(tab.covariance(theta) == doctest::Approx(covariance(m, theta)).epsilon(1e-4));
  }
  for (double theta : {0.6, 1.0, 2.0, 3.0, kPi}) {
    CHECK(std::abs(tab.covariance(theta) - covariance(m, theta)) <= 1e-5);
  }

  // Continuous at the continuation threshold, exact power law below it.
  CHECK(tab.variogram(tab.theta_c * (1.0 - 1e-9)) ==
        doctest::Approx(tab.variogram(tab.theta_c)).epsilon(1e-6));
  const double r = tab.variogram(tab.theta_c / 4) / tab.variogram(tab.theta_c / 2);
  CHECK(r == doctest::Approx(std::pow(0.5, 0.5)).epsilon(1e-12));
  CHECK(tab.variogram(0.0) == 0.0);

  CHECK_THROWS_AS(tabulate_covariance(make_covariance_model(normalize(linear_covariance_spectrum(512)))),
                  std::invalid_argument);
  CHECK_THROWS_AS(tabulate_covariance(make_covariance_model(power_law_spectrum(2.5, 512))),
                  std::invalid_argument);
}

TEST_CASE("csv export") {
  const CovarianceModel m = make_covariance_model(normalize(power_law_spectrum(3.0, 256)));
  Eigen::VectorXd thetas(4);
  thetas << 0.0, 0.5, 1.5, 3.0;
  const auto path =
      (std::filesystem::temp_directory_path() / "sgf_covariance_export.csv").string();
  save_covariance_csv(m, thetas, path);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == "theta,value,tail_bound");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == 4);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
