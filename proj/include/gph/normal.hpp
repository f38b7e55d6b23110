#ifndef GPH_NORMAL_HPP
#define GPH_NORMAL_HPP

// Standard normal density and distribution function with tail-stable
// logarithms. Everything downstream (probit likelihoods, EP moments, the
// Gibbs conditionals) goes through these.

#include <cmath>
#include <numbers>

namespace gph::normal {

inline constexpr double kInvSqrt2Pi = 0.3989422804014327;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

/// Below this point log Phi switches from erfc to the Mills-ratio
/// continued fraction.
inline constexpr double kTailSwitch = -8.0;

inline double pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

/// Mills ratio Phi(-x) / phi(x) for x > 0, evaluated bottom-up from a
/// truncated continued fraction. Accurate to machine precision for x >= 8.
inline double mills_ratio(double x) {
  double t = x;
  for (int k = 80; k >= 1; --k) {
    t = x + k / t;
  }
  return 1.0 / t;
}

inline double cdf(double z) {
  return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0);
}

/// log Phi(z), finite for every finite z.
inline double log_cdf(double z) {
  if (z < kTailSwitch) {
    return log_pdf(z) + std::log(mills_ratio(-z));
  }
  if (z > 5.0) {
    // Phi(z) = 1 - Phi(-z), keep the small complement exact.
    return std::log1p(-0.5 * std::erfc(z * std::numbers::sqrt2 / 2.0));
  }
  return std::log(cdf(z));
}

/// phi(z) / Phi(z). Computed through logarithms below z = -5 where both
/// factors underflow together.
inline double pdf_over_cdf(double z) {
  if (z < kTailSwitch) {
    return 1.0 / mills_ratio(-z);
  }
  if (z < -5.0) {
    return std::exp(log_pdf(z) - log_cdf(z));
  }
  return pdf(z) / cdf(z);
}

} // namespace gph::normal

#endif // GPH_NORMAL_HPP
