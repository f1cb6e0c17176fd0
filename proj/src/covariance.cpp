#include "sgf/covariance.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "sgf/harmonics.hpp"

namespace sgf {

CovarianceModel make_covariance_model(PowerSpectrum s) {
  if (s.l_max() < 1) throw std::invalid_argument("make_covariance_model: empty spectrum");
  const double var0 = spectrum_variance_sum(s);
  return CovarianceModel{std::move(s), var0};
}

double covariance(const CovarianceModel& m, double theta) {
  if (!(theta >= 0.0) || !(theta <= kPi)) {
    throw std::invalid_argument("covariance: theta must lie in [0, pi]");
  }
  const PowerSpectrum& s = m.spectrum;
  const LegendreTable tab = legendre_table(s.l_max(), std::cos(theta));
  long double acc = 0.0L;
  for (int l = 0; l <= s.l_max(); ++l) {
    acc += (2.0L * l + 1.0L) * s.c[l] * static_cast<long double>(tab.values[l]);
  }
  return static_cast<double>(acc / (4.0L * static_cast<long double>(kPi)));
}

double covariance_tail_bound(const CovarianceModel& m) {
  return tail_sum_bound(m.spectrum, m.spectrum.l_max() + 1);
}

double variogram(const CovarianceModel& m, double theta) {
  return std::max(0.0, 2.0 * (m.var0 - covariance(m, theta)));
}

double rho_alpha(double r, double alpha) {
  if (!(alpha > 2.0)) throw std::invalid_argument("rho_alpha: alpha must exceed 2");
  if (!(r >= 0.0)) throw std::invalid_argument("rho_alpha: r must be >= 0");
  return std::pow(r, 0.5 * (alpha - 2.0));
}

namespace {

ConditionResult schur_variance(const CovarianceModel& m, const SpherePoint& x,
                               const std::vector<SpherePoint>& conditioners) {
  const int n = static_cast<int>(conditioners.size());
  if (n == 0) throw std::invalid_argument("conditional_variance: empty conditioning set");

  std::vector<Eigen::Vector3d> u(n);
  for (int j = 0; j < n; ++j) u[j] = conditioners[j].unit();
  const Eigen::Vector3d ux = x.unit();

  const double var0 = covariance(m, 0.0);
  Eigen::MatrixXd sig(n, n);
  Eigen::VectorXd c(n);
  for (int j = 0; j < n; ++j) {
    sig(j, j) = var0;
    c[j] = covariance(m, geodesic_distance<double>(ux, u[j]));
    for (int k = j + 1; k < n; ++k) {
      sig(j, k) = sig(k, j) = covariance(m, geodesic_distance<double>(u[j], u[k]));
    }
  }

  ConditionResult out;
  Eigen::LLT<Eigen::MatrixXd> llt(sig);
  if (llt.info() != Eigen::Success) {
    sig.diagonal().array() += 1e-12;
    llt.compute(sig);
    out.regularized = true;
    if (llt.info() != Eigen::Success) {
      throw std::runtime_error("conditional_variance: conditioning set is singular");
    }
  }
  out.value = std::max(0.0, var0 - c.dot(llt.solve(c)));
  return out;
}

}  // namespace

ConditionResult conditional_variance(const CovarianceModel& m, const SpherePoint& x,
                                     const std::vector<SpherePoint>& conditioners) {
  return schur_variance(m, x, conditioners);
}

ConditionResult slnd_ratio(const CovarianceModel& m, const SpherePoint& x,
                           const std::vector<SpherePoint>& conditioners) {
  ConditionResult out = schur_variance(m, x, conditioners);
  const Eigen::Vector3d ux = x.unit();
  double dmin = kPi;
  for (const SpherePoint& p : conditioners) {
    dmin = std::min(dmin, geodesic_distance<double>(ux, p.unit()));
  }
  if (dmin == 0.0) {
    out.value = 0.0;
    return out;
  }
  const double rho = rho_alpha(dmin, m.spectrum.alpha);
  out.value /= rho * rho;
  return out;
}

double joint_density(const CovarianceModel& m, double theta, const Eigen::Vector2d& t) {
  if (!(theta > 0.0) || !(theta <= kPi)) {
    throw std::invalid_argument("joint_density: theta must lie in (0, pi]");
  }
  const double var0 = covariance(m, 0.0);
  if (std::abs(var0 - 1.0) > 1e-6) {
    throw std::invalid_argument("joint_density: spectrum must have unit variance");
  }
  const double rho = covariance(m, theta);
  const double det = 1.0 - rho * rho;
  if (!(det > 0.0)) throw std::invalid_argument("joint_density: singular correlation");
  const double q = (t[0] * t[0] - 2.0 * rho * t[0] * t[1] + t[1] * t[1]) / det;
  return std::exp(-0.5 * q) / (2.0 * kPi * std::sqrt(det));
}

void save_covariance_csv(const CovarianceModel& m, const Eigen::VectorXd& thetas,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_covariance_csv: cannot open " + path);
  const double tail = covariance_tail_bound(m);
  out << "theta,value,tail_bound\n";
  out.precision(17);
  for (Eigen::Index i = 0; i < thetas.size(); ++i) {
    out << thetas[i] << ',' << covariance(m, thetas[i]) << ',' << tail << '\n';
  }
  if (!out) throw std::runtime_error("save_covariance_csv: write failed on " + path);
}

double CovarianceTable::variogram(double theta) const {
  if (!(theta >= 0.0)) throw std::invalid_argument("CovarianceTable: negative theta");
  theta = std::min(theta, kPi);
  if (theta == 0.0) return 0.0;
  if (theta < theta_c) {
    return std::exp(log_sigma2[0]) * std::pow(theta / theta_c, alpha - 2.0);
  }
  if (theta < theta_mid) {
    const double pos = (std::log(theta) - log_theta_c) / dlog;
    const Eigen::Index j =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), log_sigma2.size() - 2);
    const double w = pos - static_cast<double>(j);
    return std::exp(log_sigma2[j] * (1.0 - w) + log_sigma2[j + 1] * w);
  }
  return std::max(0.0, 2.0 - 2.0 * covariance(theta));
}

double CovarianceTable::covariance(double theta) const {
  if (!(theta >= 0.0)) throw std::invalid_argument("CovarianceTable: negative theta");
  theta = std::min(theta, kPi);
  if (theta < theta_mid) return 1.0 - 0.5 * variogram(theta);
  const double pos = (theta - theta_mid) / dlin;
  const Eigen::Index j = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), cov_lin.size() - 2);
  const double w = pos - static_cast<double>(j);
  return cov_lin[j] * (1.0 - w) + cov_lin[j + 1] * w;
}

CovarianceTable tabulate_covariance(const CovarianceModel& m, double theta_c, int n_log,
                                    int n_lin) {
  if (!admissible(m.spectrum)) {
    throw std::invalid_argument(
        "tabulate_covariance: requires a power-law spectrum with exponent in (2, 4)");
  }
  if (std::abs(covariance(m, 0.0) - 1.0) > 1e-6) {
    throw std::invalid_argument("tabulate_covariance: spectrum must have unit variance");
  }
  if (n_log < 2 || n_lin < 2) throw std::invalid_argument("tabulate_covariance: grid too small");

  CovarianceTable t;
  t.alpha = m.spectrum.alpha;
  t.theta_c = theta_c > 0.0 ? theta_c : 10.0 / m.spectrum.l_max();
  t.theta_mid = 0.5;
  if (!(t.theta_c < t.theta_mid / 2)) {
    throw std::invalid_argument("tabulate_covariance: theta_c too large");
  }
  t.log_theta_c = std::log(t.theta_c);
  t.dlog = (std::log(t.theta_mid) - t.log_theta_c) / (n_log - 1);
  t.log_sigma2.resize(n_log);
  for (int j = 0; j < n_log; ++j) {
    const double th = std::exp(t.log_theta_c + j * t.dlog);
    const double s2 = sgf::variogram(m, th);
    if (!(s2 > 0.0)) throw std::runtime_error("tabulate_covariance: vanishing variogram");
    t.log_sigma2[j] = std::log(s2);
  }
  t.dlin = (kPi - t.theta_mid) / (n_lin - 1);
  t.cov_lin.resize(n_lin);
  for (int j = 0; j < n_lin; ++j) {
    t.cov_lin[j] = sgf::covariance(m, t.theta_mid + j * t.dlin);
  }
  return t;
}

}  // namespace sgf
