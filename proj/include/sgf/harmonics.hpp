#pragma once
// Legendre polynomials, fully-normalized associated Legendre functions,
// orthonormal complex spherical harmonics (Condon-Shortley phase), and
// Gauss-Legendre quadrature rules.

#include <Eigen/Dense>

#include <complex>

#include "sgf/sphere_geom.hpp"

namespace sgf {

// P_ell(x) by the three-term recurrence. The long double instantiation is
// the extended-precision reference used in tests.
template <typename Scalar>
Scalar legendre_p(int ell, Scalar x);

struct LegendreTable {
  int l_max = 0;
  double x = 0.0;
  Eigen::VectorXd values;  // P_0 .. P_{l_max}(x)
};

LegendreTable legendre_table(int l_max, double x);

// lambda_{ell,m}(theta) for ell = m..l_max, where
//   Y_{ell,m}(theta, phi) = lambda_{ell,m}(theta) * exp(i m phi),  m >= 0.
// Normalization folds into the recurrence; an internal power-of-two scale
// keeps the iteration finite at degrees in the thousands, and magnitudes
// that underflow double range are flushed to zero rather than NaN.
template <typename Scalar>
void legendre_lambda_col(int l_max, int m, Scalar theta,
                         Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> out);

std::complex<double> spherical_harmonic(int ell, int m, const SpherePoint& p);

// |sum_m Y_{ell,m}(p) conj(Y_{ell,m}(q)) - (2 ell + 1)/(4 pi) P_ell(<p,q>)|.
double addition_theorem_check(int ell, const SpherePoint& p, const SpherePoint& q);

struct GaussLegendreRule {
  Eigen::VectorXd nodes;    // ascending, in (-1, 1)
  Eigen::VectorXd weights;  // sum to 2
};

GaussLegendreRule gauss_legendre(int n);

}  // namespace sgf
