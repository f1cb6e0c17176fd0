// Covariance of an isotropic Gaussian field from its angular power spectrum:
// cov(theta) = sum_l C_l (2l+1)/(4pi) P_l(cos theta), the variogram
// sigma^2 = 2 - 2 cov, Gaussian conditioning diagnostics, and the bivariate
// density kernel. Unit-variance (normalized) spectra make cov(0) = 1;
// operations that require that normalization check it and say so.
#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "sgf/spectrum.hpp"
#include "sgf/sphere_geom.hpp"

namespace sgf {

struct CovarianceModel {
  PowerSpectrum spectrum;
  double var0 = 1.0;  // cov(0) = sum of (2l+1) C_l / 4 pi, cached at build
};

CovarianceModel make_covariance_model(PowerSpectrum s);

// Truncated Schoenberg sum at theta in [0, pi].
double covariance(const CovarianceModel& m, double theta);

// Bound on the contribution of degrees beyond l_max, uniform in theta.
double covariance_tail_bound(const CovarianceModel& m);

// 2 - 2 cov(theta), floored at zero. Equals the increment variance
// E[(T(x)-T(y))^2] for a unit-variance field.
double variogram(const CovarianceModel& m, double theta);

// The scale gauge r^{(alpha-2)/2}. Throws for alpha <= 2 or r < 0.
double rho_alpha(double r, double alpha);

struct ConditionResult {
  double value = 0;
  bool regularized = false;  // diagonal ridge was needed for the factorization
};

// Var(T(x) | T(x_1), ..., T(x_n)) by Schur complement on the joint covariance
// matrix. A failed Cholesky gets one retry with ridge 1e-12 on the diagonal.
// The conditioning set may include any reference points (for increment-field
// diagnostics, include the base point itself).
ConditionResult conditional_variance(const CovarianceModel& m, const SpherePoint& x,
                                     const std::vector<SpherePoint>& conditioners);

// conditional_variance divided by min_k rho_alpha^2(d(x, x_k)), the local
// nondeterminism ratio; zero when x coincides with a conditioner. Uses the
// spectrum's declared exponent.
ConditionResult slnd_ratio(const CovarianceModel& m, const SpherePoint& x,
                           const std::vector<SpherePoint>& conditioners);

// Bivariate normal density at t with unit variances and correlation
// cov(theta). Throws for theta = 0 (singular) or a spectrum whose variance
// is not 1.
double joint_density(const CovarianceModel& m, double theta, const Eigen::Vector2d& t);

// CSV export: rows theta,value,tail_bound.
void save_covariance_csv(const CovarianceModel& m, const Eigen::VectorXd& thetas,
                         const std::string& path);

// Fast covariance lookups for Monte Carlo paths. The variogram is stored in
// log-log form on [theta_c, theta_mid] (where it is close to a power law)
// and the covariance linearly on [theta_mid, pi]. Below theta_c, degrees
// beyond l_max would dominate and the truncated sum flattens out, so the
// table continues the exact power law sigma^2(theta_c) (theta/theta_c)^{alpha-2}
// instead. Requires an admissible unit-variance spectrum.
struct CovarianceTable {
  double alpha = 0;
  double theta_c = 0;
  double theta_mid = 0;
  double log_theta_c = 0;
  double dlog = 0;              // log-grid step
  Eigen::VectorXd log_sigma2;   // log variogram at log-spaced nodes
  double dlin = 0;              // uniform-grid step
  Eigen::VectorXd cov_lin;      // covariance at uniform nodes on [theta_mid, pi]

  double variogram(double theta) const;
  double covariance(double theta) const;
};

// theta_c <= 0 selects the default 10 / l_max.
CovarianceTable tabulate_covariance(const CovarianceModel& m, double theta_c = 0.0,
                                    int n_log = 2048, int n_lin = 2048);

}  // namespace sgf
