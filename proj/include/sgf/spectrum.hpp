// Angular power spectrum models for isotropic Gaussian random fields on the
// unit sphere. A spectrum is the sequence C_0..C_Lmax in the Schoenberg
// expansion cov(theta) = sum_l C_l (2l+1)/(4pi) P_l(cos theta); the field has
// unit variance exactly when that sum equals 1.
#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Core>

namespace sgf {

enum class SpectrumKind {
  power_law,         // C_l = l^-alpha g(l), g within [1/K0, K0]
  hurst,             // C_l = l^-(2H+2), optional exponentially small odd terms
  linear_covariance, // Legendre coefficients of 1 - (2/pi) * geodesic distance
  custom,
};

struct PowerSpectrum {
  Eigen::VectorXd c;  // C_0..C_Lmax
  double alpha = 0;   // declared decay exponent
  double k0 = 1;      // declared regularity bound, >= 1
  SpectrumKind kind = SpectrumKind::custom;
  bool normalized = false;
  // Set when the declared exponent is known to misdescribe the generating
  // model (hurst with h >= 1/2); consumers should surface it.
  bool model_warning = false;

  int l_max() const { return static_cast<int>(c.size()) - 1; }
};

// sum_l (2l+1) C_l / (4pi), the variance of the synthesized field.
double spectrum_variance_sum(const PowerSpectrum& s);

// C_0 = 0, C_l = l^-alpha g(l) for l >= 1. Throws if alpha <= 2, k0 < 1, or
// any g(l) falls outside [1/k0, k0].
PowerSpectrum power_law_spectrum(double alpha, double k0,
                                 const std::function<double(int)>& g, int l_max);
PowerSpectrum power_law_spectrum(double alpha, int l_max);  // g == 1, k0 = 1

// Rescales so that spectrum_variance_sum == 1; k0 grows to keep the declared
// bounds valid for the rescaled coefficients. Throws on an all-zero spectrum.
PowerSpectrum normalize(const PowerSpectrum& s);

// C_l = l^-(2h+2) for h in (0,1), h != 1/2 boundary semantics: declared
// exponent is 2h+2; for h >= 1/2 the model_warning flag is set. When
// odd_correction is true, degrees 2k+1 >= 3 get an additive term
// (2k+1)^-2 (2pi)^-(2k+1), the decay profile of the exact expansion of the
// cap-integral model (constant factor fixed to 1).
PowerSpectrum hurst_spectrum(double h, int l_max, bool odd_correction = false);

// Series value sum_{n>=ell} [(2n-1)!!]^2 / [(2n+2ell+3)!! (2n-2ell)!!],
// summed by term-ratio recursion with power-of-two rescaling (the leading
// terms underflow doubles for large ell). Converged when the next term drops
// below rel_tol times the running sum; throws if max_terms is hit first.
double linear_covariance_series(int ell, std::int64_t max_terms = 400000000,
                                double rel_tol = 1e-15);

// Literal partial sum of the first n_terms terms of the same series.
double linear_covariance_partial_sum(int ell, std::int64_t n_terms);

// Spectrum whose covariance is 1 - (2/pi) d(x,y): zero at even degrees,
// C_{2k+1} = 4pi [(2k-1)!!/(2k+2)!!]^2. These are the Legendre coefficients
// of f(t) = 1 - (2/pi) arccos t, obtained by parts from
// int P_{2m}(t) (1-t^2)^{-1/2} dt = pi P_{2m}(0)^2. Declared exponent 1.
PowerSpectrum linear_covariance_spectrum(int l_max);

// Numerically checks C_l > 0 and 1/k0 <= l^alpha C_l <= k0 for all l >= 1.
bool verify_power_law_bounds(const PowerSpectrum& s);

// Gate for analyses that assume a regularly varying spectrum with exponent
// in (2,4): verifies the bounds above and the exponent range.
bool admissible(const PowerSpectrum& s);

// Area of the intersection of two spherical caps of common radius r whose
// centers are theta apart. Zero for theta >= 2r. r must lie in (0, pi/2).
double cap_overlap_area(double theta, double r);

// sum_{l=1}^{l_cut} (2l+1)/(4pi) C_l (1 - P_l(cos theta)): the low-degree
// part of half the variogram.
double head_increment_sum(const PowerSpectrum& s, int l_cut, double theta);

// Upper bound on sup_theta sum_{l>=u_cut} (2l+1)/(4pi) C_l (1-P_l), using
// 1-P_l <= 2: the stored coefficients are summed exactly and, for power-law
// kinds, an integral bound covers degrees beyond l_max.
double tail_sum_bound(const PowerSpectrum& s, int u_cut);

// CSV (columns ell,C_ell) plus a JSON sidecar at path + ".json" holding
// alpha, k0, provenance, and the normalization flag.
void save_spectrum_csv(const PowerSpectrum& s, const std::string& path);
PowerSpectrum load_spectrum_csv(const std::string& path);

// FNV-1a over the coefficient bytes and declared metadata; identifies a
// spectrum in output files.
std::uint64_t spectrum_hash(const PowerSpectrum& s);

}  // namespace sgf
