#include "sgf/spectrum.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "sgf/harmonics.hpp"
#include "sgf/sphere_geom.hpp"

#include "json.hpp"

namespace sgf {

double spectrum_variance_sum(const PowerSpectrum& s) {
  long double acc = 0.0L;
  for (int l = 0; l <= s.l_max(); ++l) acc += (2.0L * l + 1.0L) * s.c[l];
  return static_cast<double>(acc / (4.0L * static_cast<long double>(kPi)));
}

PowerSpectrum power_law_spectrum(double alpha, double k0,
                                 const std::function<double(int)>& g, int l_max) {
  if (!(alpha > 2.0)) throw std::invalid_argument("power_law_spectrum: alpha must exceed 2");
  if (!(k0 >= 1.0)) throw std::invalid_argument("power_law_spectrum: k0 must be >= 1");
  if (l_max < 1) throw std::invalid_argument("power_law_spectrum: l_max must be >= 1");
  PowerSpectrum s;
  s.c.setZero(l_max + 1);
  const double lo = (1.0 / k0) * (1.0 - 1e-12);
  const double hi = k0 * (1.0 + 1e-12);
  for (int l = 1; l <= l_max; ++l) {
    const double gl = g(l);
    if (!std::isfinite(gl) || gl < lo || gl > hi) {
      throw std::invalid_argument("power_law_spectrum: modulation escapes [1/k0, k0] at degree " +
                                  std::to_string(l));
    }
    s.c[l] = std::pow(static_cast<double>(l), -alpha) * gl;
  }
  s.alpha = alpha;
  s.k0 = k0;
  s.kind = SpectrumKind::power_law;
  return s;
}

PowerSpectrum power_law_spectrum(double alpha, int l_max) {
  return power_law_spectrum(alpha, 1.0, [](int) { return 1.0; }, l_max);
}

PowerSpectrum normalize(const PowerSpectrum& s) {
  const double sum = spectrum_variance_sum(s);
  if (!(sum > 0.0)) throw std::invalid_argument("normalize: spectrum sums to zero");
  PowerSpectrum out = s;
  out.c /= sum;
  // The rescale shifts l^alpha C_l by 1/sum; widen k0 so the declared bounds
  // still contain it.
  out.k0 = s.k0 * std::max(sum, 1.0 / sum);
  out.normalized = true;
  return out;
}

PowerSpectrum hurst_spectrum(double h, int l_max, bool odd_correction) {
  if (!(h > 0.0) || h >= 1.0) {
    throw std::invalid_argument("hurst_spectrum: h must lie in (0, 1)");
  }
  if (l_max < 1) throw std::invalid_argument("hurst_spectrum: l_max must be >= 1");
  const double alpha = 2.0 * h + 2.0;
  PowerSpectrum s;
  s.c.setZero(l_max + 1);
  for (int l = 1; l <= l_max; ++l) s.c[l] = std::pow(static_cast<double>(l), -alpha);
  if (odd_correction) {
    for (int l = 3; l <= l_max; l += 2) {
      s.c[l] += std::pow(static_cast<double>(l), -2.0) * std::pow(2.0 * kPi, -static_cast<double>(l));
    }
  }
  s.alpha = alpha;
  s.kind = SpectrumKind::hurst;
  s.model_warning = h >= 0.5;
  // The realized coefficients stay a power law; record the widening caused
  // by the optional correction terms.
  double kmax = 1.0;
  for (int l = 1; l <= l_max; ++l) {
    const double t = std::pow(static_cast<double>(l), alpha) * s.c[l];
    kmax = std::max({kmax, t, 1.0 / t});
  }
  s.k0 = kmax;
  return s;
}

namespace {

// log of (2k-1)!! = lgamma(2k+1) - k log 2 - lgamma(k+1), valid for k >= 0.
double log_odd_double_factorial(std::int64_t k) {
  return std::lgamma(2.0 * k + 1.0) - k * std::log(2.0) - std::lgamma(k + 1.0);
}

// Shared series loop. Terms t_n, n = ell, ell+1, ...:
//   t_{n+1}/t_n = (2n+1)^2 / ((2n+2ell+5)(2n-2ell+2)),
// which exceeds 1 until n ~ 0.4 ell^2, so the first term (~4^-ell) can lie
// far below the final scale; the running term is kept in [2^-512, 2^512)
// with an explicit binary exponent.
double series_sum(int ell, std::int64_t max_terms, double rel_tol, bool require_converged) {
  if (ell < 2) throw std::invalid_argument("linear_covariance_series: ell must be >= 2");
  if (max_terms < 1) throw std::invalid_argument("linear_covariance_series: need at least one term");

  // First term n = ell: [(2ell-1)!!]^2 / (4ell+3)!!, via logs.
  const double lt0 = 2.0 * log_odd_double_factorial(ell) - log_odd_double_factorial(2 * ell + 2);
  int e0 = 0;
  double t = std::frexp(std::exp(lt0 / 2.0), &e0);  // sqrt trick avoids exp underflow
  int exp2 = 2 * e0;
  t = t * t;  // t * 2^exp2 == first term

  double sum = 0.0;
  const double n_float_guard = 2.0e18;
  for (std::int64_t i = 0; i < max_terms; ++i) {
    const double n = static_cast<double>(ell) + static_cast<double>(i);
    if (n > n_float_guard) break;
    // accumulate the true term when representable
    const double term = (exp2 == 0) ? t : std::ldexp(t, exp2);
    sum += term;
    const double ratio = (2 * n + 1) * (2 * n + 1) /
                         ((2 * n + 2 * ell + 5) * (2 * n - 2 * ell + 2));
    if (ratio < 1.0 && term < rel_tol * sum) return sum;
    t *= ratio;
    if (t < 0x1p-512) {
      t = std::ldexp(t, 512);
      exp2 -= 512;
    } else if (t >= 0x1p512 || (exp2 < 0 && t >= 1.0)) {
      const int up = std::min(512, -exp2);
      if (up > 0) {
        t = std::ldexp(t, -up);
        exp2 += up;
      }
    }
  }
  if (require_converged) {
    throw std::runtime_error("linear_covariance_series: not converged within term cap");
  }
  return sum;
}

}  // namespace

double linear_covariance_series(int ell, std::int64_t max_terms, double rel_tol) {
  return series_sum(ell, max_terms, rel_tol, true);
}

double linear_covariance_partial_sum(int ell, std::int64_t n_terms) {
  return series_sum(ell, n_terms, 0.0, false);
}

PowerSpectrum linear_covariance_spectrum(int l_max) {
  if (l_max < 1) throw std::invalid_argument("linear_covariance_spectrum: l_max must be >= 1");
  PowerSpectrum s;
  s.c.setZero(l_max + 1);
  double u = 0.25;  // [(2k-1)!!/(2k+2)!!]^2 at k = 0
  for (int k = 0; 2 * k + 1 <= l_max; ++k) {
    if (k > 0) {
      const double f = (2.0 * k - 1.0) / (2.0 * k + 2.0);
      u *= f * f;
    }
    s.c[2 * k + 1] = 4.0 * kPi * u;
  }
  s.alpha = 1.0;
  s.k0 = 1.0;
  s.kind = SpectrumKind::linear_covariance;
  return s;
}

bool verify_power_law_bounds(const PowerSpectrum& s) {
  if (!(s.alpha > 0.0) || !(s.k0 >= 1.0)) return false;
  const double lo = (1.0 / s.k0) * (1.0 - 1e-9);
  const double hi = s.k0 * (1.0 + 1e-9);
  for (int l = 1; l <= s.l_max(); ++l) {
    if (!(s.c[l] > 0.0)) return false;
    const double t = std::pow(static_cast<double>(l), s.alpha) * s.c[l];
    if (!(t >= lo) || !(t <= hi)) return false;
  }
  return true;
}

bool admissible(const PowerSpectrum& s) {
  return s.alpha > 2.0 && s.alpha < 4.0 && verify_power_law_bounds(s);
}

double cap_overlap_area(double theta, double r) {
  if (!(r > 0.0) || !(r < kPi / 2)) {
    throw std::invalid_argument("cap_overlap_area: r must lie in (0, pi/2)");
  }
  if (!(theta >= 0.0) || !(theta <= kPi)) {
    throw std::invalid_argument("cap_overlap_area: theta must lie in [0, pi]");
  }
  if (theta >= 2.0 * r) return 0.0;
  // Gauss-Bonnet on the lens: area = 2 i - 4 delta cos r, where i is the
  // corner interior angle and delta the azimuthal half-width of each arc.
  const double cr = std::cos(r), sr = std::sin(r);
  const double ci = std::clamp((std::cos(theta) - cr * cr) / (sr * sr), -1.0, 1.0);
  const double i = kPi - std::acos(ci);
  const double cd = std::clamp((cr / sr) * std::tan(theta / 2.0), -1.0, 1.0);
  const double delta = std::acos(cd);
  return std::max(0.0, 2.0 * i - 4.0 * delta * cr);
}

double head_increment_sum(const PowerSpectrum& s, int l_cut, double theta) {
  if (l_cut < 1 || l_cut > s.l_max()) {
    throw std::invalid_argument("head_increment_sum: l_cut out of range");
  }
  if (!(theta > 0.0) || !(theta <= kPi)) {
    throw std::invalid_argument("head_increment_sum: theta out of range");
  }
  const LegendreTable tab = legendre_table(l_cut, std::cos(theta));
  long double acc = 0.0L;
  for (int l = 1; l <= l_cut; ++l) {
    acc += (2.0L * l + 1.0L) * s.c[l] * (1.0L - static_cast<long double>(tab.values[l]));
  }
  return static_cast<double>(acc / (4.0L * static_cast<long double>(kPi)));
}

double tail_sum_bound(const PowerSpectrum& s, int u_cut) {
  if (u_cut < 2) throw std::invalid_argument("tail_sum_bound: u_cut must be >= 2");
  long double acc = 0.0L;
  for (int l = u_cut; l <= s.l_max(); ++l) acc += (2.0L * l + 1.0L) * s.c[l];
  double bound = static_cast<double>(acc / (2.0L * static_cast<long double>(kPi)));
  if (s.kind == SpectrumKind::power_law || s.kind == SpectrumKind::hurst) {
    // Degrees beyond the stored range: sum_{l>L} (2l+1) l^-alpha bounded by
    // the integral, times the regularity constant.
    const double L = static_cast<double>(std::max(s.l_max(), u_cut - 1));
    const double a = s.alpha;
    bound += (s.k0 / (2.0 * kPi)) *
             (2.0 * std::pow(L, 2.0 - a) / (a - 2.0) + std::pow(L, 1.0 - a) / (a - 1.0));
  }
  return bound;
}

namespace {

const char* kind_name(SpectrumKind k) {
  switch (k) {
    case SpectrumKind::power_law: return "power-law";
    case SpectrumKind::hurst: return "hurst";
    case SpectrumKind::linear_covariance: return "linear-covariance";
    case SpectrumKind::custom: return "custom";
  }
  return "custom";
}

SpectrumKind kind_from_name(const std::string& n) {
  if (n == "power-law") return SpectrumKind::power_law;
  if (n == "hurst") return SpectrumKind::hurst;
  if (n == "linear-covariance") return SpectrumKind::linear_covariance;
  if (n == "custom") return SpectrumKind::custom;
  throw std::runtime_error("load_spectrum_csv: unknown provenance '" + n + "'");
}

}  // namespace

void save_spectrum_csv(const PowerSpectrum& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_spectrum_csv: cannot open " + path);
  out << "ell,C_ell\n";
  out.precision(17);
  for (int l = 0; l <= s.l_max(); ++l) out << l << ',' << s.c[l] << '\n';
  if (!out) throw std::runtime_error("save_spectrum_csv: write failed on " + path);

  nlohmann::json meta{{"alpha", s.alpha},
                      {"k0", s.k0},
                      {"provenance", kind_name(s.kind)},
                      {"normalized", s.normalized},
                      {"model_warning", s.model_warning}};
  std::ofstream side(path + ".json");
  if (!side) throw std::runtime_error("save_spectrum_csv: cannot open " + path + ".json");
  side << meta.dump(2) << '\n';
  if (!side) throw std::runtime_error("save_spectrum_csv: write failed on " + path + ".json");
}

PowerSpectrum load_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_spectrum_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("ell,", 0) != 0) {
    throw std::runtime_error("load_spectrum_csv: missing header in " + path);
  }
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("load_spectrum_csv: bad row in " + path);
    const long ell = std::stol(line.substr(0, comma));
    if (ell != static_cast<long>(vals.size())) {
      throw std::runtime_error("load_spectrum_csv: degrees out of order in " + path);
    }
    vals.push_back(std::stod(line.substr(comma + 1)));
  }
  if (vals.empty()) throw std::runtime_error("load_spectrum_csv: no rows in " + path);

  std::ifstream side(path + ".json");
  if (!side) throw std::runtime_error("load_spectrum_csv: missing sidecar " + path + ".json");
  nlohmann::json meta = nlohmann::json::parse(side);

  PowerSpectrum s;
  s.c = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  s.alpha = meta.at("alpha").get<double>();
  s.k0 = meta.at("k0").get<double>();
  s.kind = kind_from_name(meta.at("provenance").get<std::string>());
  s.normalized = meta.at("normalized").get<bool>();
  s.model_warning = meta.value("model_warning", false);
  return s;
}

std::uint64_t spectrum_hash(const PowerSpectrum& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::uint8_t kind = static_cast<std::uint8_t>(s.kind);
  const std::uint8_t flags = (s.normalized ? 1 : 0) | (s.model_warning ? 2 : 0);
  mix(&kind, 1);
  mix(&flags, 1);
  mix(&s.alpha, sizeof(double));
  mix(&s.k0, sizeof(double));
  const std::int64_t n = s.c.size();
  mix(&n, sizeof(n));
  mix(s.c.data(), sizeof(double) * static_cast<size_t>(n));
  return h;
}

}  // namespace sgf
