#include "gph/normal.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace {

long double ref_log_cdf(long double z) {
  return std::log(0.5L * std::erfc(-z / std::sqrt(2.0L)));
}

TEST(Normal, CdfKnownValues) {
  EXPECT_DOUBLE_EQ(gph::normal::cdf(0.0), 0.5);
  EXPECT_NEAR(gph::normal::cdf(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gph::normal::cdf(-2.0), 0.022750131948179195, 1e-17);
}

TEST(Normal, LogCdfMatchesExtendedPrecision) {
  for (double z = -30.0; z <= 30.0; z += 0.0625) {
    const long double ref = ref_log_cdf(z);
    const double got = gph::normal::log_cdf(z);
    const double tol = 1e-13 * std::max(1.0L, std::abs(ref));
    EXPECT_NEAR(got, static_cast<double>(ref), tol + 1e-300) << "z = " << z;
  }
}

TEST(Normal, LogCdfUpperTailKeepsComplement) {
  // log Phi(10) = log(1 - 7.6e-24), not zero.
  EXPECT_LT(gph::normal::log_cdf(10.0), 0.0);
  EXPECT_NEAR(gph::normal::log_cdf(10.0), -7.61985302416047e-24, 1e-36);
}

TEST(Normal, PdfOverCdfMatchesExtendedPrecision) {
  for (double z = -30.0; z <= 10.0; z += 0.125) {
    const long double zl = z;
    const long double ref = std::exp(-0.5L * zl * zl) / std::sqrt(2.0L * 3.14159265358979323846264L) /
                            (0.5L * std::erfc(-zl / std::sqrt(2.0L)));
    EXPECT_NEAR(gph::normal::pdf_over_cdf(z), static_cast<double>(ref), 1e-12 * static_cast<double>(ref))
        << "z = " << z;
  }
}

TEST(Normal, ContinuousAcrossTailSwitch) {
  const double below = gph::normal::log_cdf(gph::normal::kTailSwitch - 1e-12);
  const double above = gph::normal::log_cdf(gph::normal::kTailSwitch + 1e-12);
  EXPECT_NEAR(below, above, 1e-10);
  EXPECT_TRUE(std::isfinite(gph::normal::log_cdf(-1e3)));
}

} // namespace
