#include "sgf/harmonics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace sgf {

template <typename Scalar>
Scalar legendre_p(int ell, Scalar x) {
  if (ell < 0) throw std::invalid_argument("legendre_p: negative degree");
  if (!(x >= Scalar(-1) && x <= Scalar(1))) {
    throw std::invalid_argument("legendre_p: abscissa outside [-1, 1]");
  }
  if (ell == 0) return Scalar(1);
  Scalar pm1 = Scalar(1), p = x;
  for (int l = 1; l < ell; ++l) {
    const Scalar next = ((2 * l + 1) * x * p - Scalar(l) * pm1) / Scalar(l + 1);
    pm1 = p;
    p = next;
  }
  return p;
}

template double legendre_p<double>(int, double);
template long double legendre_p<long double>(int, long double);

LegendreTable legendre_table(int l_max, double x) {
  if (l_max < 0) throw std::invalid_argument("legendre_table: negative degree");
  if (!(x >= -1.0 && x <= 1.0)) {
    throw std::invalid_argument("legendre_table: abscissa outside [-1, 1]");
  }
  LegendreTable t;
  t.l_max = l_max;
  t.x = x;
  t.values.resize(l_max + 1);
  t.values[0] = 1.0;
  if (l_max >= 1) t.values[1] = x;
  for (int l = 1; l < l_max; ++l) {
    t.values[l + 1] = ((2 * l + 1) * x * t.values[l] - l * t.values[l - 1]) / (l + 1);
  }
  return t;
}

namespace {

// Mantissa window for the scaled recurrence. Values v carry an implicit
// factor 2^scale_exp; rescaling both history terms preserves the linear
// recurrence exactly.
constexpr int kScaleShift = 500;

template <typename Scalar>
inline Scalar emit(Scalar v, int scale_exp) {
  if (scale_exp == 0) return v;
  return std::ldexp(v, scale_exp);
}

}  // namespace

template <typename Scalar>
void legendre_lambda_col(int l_max, int m, Scalar theta,
                         Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> out) {
  if (m < 0 || m > l_max) throw std::invalid_argument("legendre_lambda_col: bad order");
  if (out.size() != l_max - m + 1) {
    throw std::invalid_argument("legendre_lambda_col: output size mismatch");
  }
  using std::cos;
  using std::sin;
  using std::sqrt;
  const Scalar ct = cos(theta);
  const Scalar st = sin(theta);
  const Scalar inv_sqrt_4pi = Scalar(1) / sqrt(Scalar(4) * Scalar(kPi));

  // Sectoral start lambda_{m,m} with running rescale: the plain product
  // underflows near the poles long before the downstream values do.
  Scalar v = inv_sqrt_4pi;
  int scale_exp = 0;
  for (int k = 1; k <= m; ++k) {
    v *= -st * sqrt(Scalar(2 * k + 1) / Scalar(2 * k));
    if (std::abs(v) < std::ldexp(Scalar(1), -kScaleShift) && v != Scalar(0)) {
      v = std::ldexp(v, kScaleShift);
      scale_exp -= kScaleShift;
    }
  }

  out[0] = emit(v, scale_exp);
  if (l_max == m) return;

  Scalar prev = v;                                       // lambda_{m,m}
  Scalar cur = sqrt(Scalar(2 * m + 3)) * ct * v;         // lambda_{m+1,m}
  out[1] = emit(cur, scale_exp);

  for (int l = m + 2; l <= l_max; ++l) {
    const Scalar l2 = Scalar(l) * Scalar(l);
    const Scalar m2 = Scalar(m) * Scalar(m);
    const Scalar a = sqrt((Scalar(4) * l2 - Scalar(1)) / (l2 - m2));
    const Scalar b = sqrt(Scalar(2 * l + 1) / Scalar(2 * l - 3) *
                          (Scalar(l - 1) * Scalar(l - 1) - m2) / (l2 - m2));
    const Scalar next = a * ct * cur - b * prev;
    prev = cur;
    cur = next;
    const Scalar mx = std::max(std::abs(prev), std::abs(cur));
    if (mx > std::ldexp(Scalar(1), kScaleShift)) {
      prev = std::ldexp(prev, -kScaleShift);
      cur = std::ldexp(cur, -kScaleShift);
      scale_exp += kScaleShift;
    } else if (mx < std::ldexp(Scalar(1), -kScaleShift) && mx != Scalar(0)) {
      prev = std::ldexp(prev, kScaleShift);
      cur = std::ldexp(cur, kScaleShift);
      scale_exp -= kScaleShift;
    }
    out[l - m] = emit(cur, scale_exp);
  }
}

template void legendre_lambda_col<double>(int, int, double,
                                          Eigen::Ref<Eigen::VectorXd>);
template void legendre_lambda_col<long double>(
    int, int, long double, Eigen::Ref<Eigen::Matrix<long double, Eigen::Dynamic, 1>>);

std::complex<double> spherical_harmonic(int ell, int m, const SpherePoint& p) {
  if (ell < 0 || std::abs(m) > ell) {
    throw std::invalid_argument("spherical_harmonic: |m| > ell");
  }
  const int am = std::abs(m);
  Eigen::VectorXd col(ell - am + 1);
  legendre_lambda_col<double>(ell, am, p.colat, col);
  double lam = col[ell - am];
  if (m < 0 && (am % 2 == 1)) lam = -lam;
  const double arg = m * p.lon;
  return {lam * std::cos(arg), lam * std::sin(arg)};
}

double addition_theorem_check(int ell, const SpherePoint& p, const SpherePoint& q) {
  const Eigen::Vector3d up = p.unit(), uq = q.unit();
  const double c = std::clamp(up.dot(uq), -1.0, 1.0);
  const double target = (2.0 * ell + 1.0) / (4.0 * kPi) * legendre_p<double>(ell, c);

  // sum_m Y_lm(p) conj(Y_lm(q)) is real: the +-m terms pair into cosines.
  // Kahan compensation keeps the roundoff of ~2 ell adds below the 1e-10
  // budget at ell = 1024.
  Eigen::VectorXd colp(ell + 1), colq(ell + 1);
  double sum = 0.0, comp = 0.0;
  auto accumulate = [&](double term) {
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  const double dlon = p.lon - q.lon;
  for (int m = ell; m >= 0; --m) {
    Eigen::Ref<Eigen::VectorXd> cp(colp.head(ell - m + 1));
    Eigen::Ref<Eigen::VectorXd> cq(colq.head(ell - m + 1));
    legendre_lambda_col<double>(ell, m, p.colat, cp);
    legendre_lambda_col<double>(ell, m, q.colat, cq);
    const double prod = cp[ell - m] * cq[ell - m];
    accumulate(m == 0 ? prod : 2.0 * prod * std::cos(m * dlon));
  }
  return std::abs(sum - target);
}

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi-style initial guess, then Newton on P_n.
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double pm1 = 1.0, p = x;
      for (int l = 1; l < n; ++l) {
        const double next = ((2 * l + 1) * x * p - l * pm1) / (l + 1);
        pm1 = p;
        p = next;
      }
      pp = n * (x * p - pm1) / (x * x - 1.0);
      const double dx = p / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace sgf
