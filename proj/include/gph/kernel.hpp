#ifndef GPH_KERNEL_HPP
#define GPH_KERNEL_HPP

#include "gph/errors.hpp"
#include "gph/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <sstream>
#include <string>

namespace gph {

/// Hyperparameters of the isotropic squared-exponential covariance
/// k(a, b) = signal_std^2 * exp(-|a - b|^2 / (2 length_scale^2)).
struct KernelConfig {
  double signal_std = 1.0;
  double length_scale = 1.0;
  double jitter = 1e-8;

  void validate() const {
    if (!(signal_std > 0.0) || !(length_scale > 0.0) || !(jitter >= 0.0) ||
        !std::isfinite(signal_std) || !std::isfinite(length_scale) ||
        !std::isfinite(jitter)) {
      std::ostringstream os;
      os << "invalid kernel config: signal_std=" << signal_std
         << " length_scale=" << length_scale << " jitter=" << jitter;
      throw UsageError(os.str());
    }
  }

  [[nodiscard]] double signal_variance() const { return signal_std * signal_std; }

  bool operator==(const KernelConfig &) const = default;
};

inline std::span<const double> row_span(const Matrix &m, Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

namespace detail {

// Plain loops: a fixed summation order keeps single-row and batch
// evaluation bit-identical.
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    s += a[k] * b[k];
  }
  return s;
}

inline double se_from_sq_norms(double na, double nb, double ab,
                               const KernelConfig &cfg) {
  const double sq = std::max(0.0, na + nb - 2.0 * ab);
  return cfg.signal_variance() *
         std::exp(-sq / (2.0 * cfg.length_scale * cfg.length_scale));
}

inline Vector row_sq_norms(const Matrix &m) {
  Vector out(m.rows());
  for (Index i = 0; i < m.rows(); ++i) {
    out[i] = dot(row_span(m, i), row_span(m, i));
  }
  return out;
}

} // namespace detail

inline double kernel_eval(std::span<const double> a, std::span<const double> b,
                          const KernelConfig &cfg) {
  if (a.size() != b.size() || a.empty()) {
    std::ostringstream os;
    os << "kernel_eval: dimension mismatch (" << a.size() << " vs " << b.size()
       << ")";
    throw DimensionError(os.str());
  }
  return detail::se_from_sq_norms(detail::dot(a, a), detail::dot(b, b),
                                  detail::dot(a, b), cfg);
}

/// Cross-covariance between the rows of `a` (p x d) and `b` (q x d).
inline Matrix gram_matrix(const Matrix &a, const Matrix &b,
                          const KernelConfig &cfg) {
  if (a.cols() != b.cols()) {
    std::ostringstream os;
    os << "gram_matrix: dimension mismatch (" << a.cols() << " vs " << b.cols()
       << ")";
    throw DimensionError(os.str());
  }
  const Vector na = detail::row_sq_norms(a);
  const Vector nb = detail::row_sq_norms(b);
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    const auto ai = row_span(a, i);
    for (Index l = 0; l < b.rows(); ++l) {
      out(i, l) = detail::se_from_sq_norms(na[i], nb[l],
                                           detail::dot(ai, row_span(b, l)), cfg);
    }
  }
  return out;
}

/// Lower Cholesky factor of M + jitter_used * I.
struct Factorization {
  Eigen::MatrixXd lower;
  double jitter_used = 0.0;

  [[nodiscard]] Index size() const { return lower.rows(); }

  /// Solves L x = b in place.
  template <typename Rhs> void solve_lower_in_place(Rhs &&b) const {
    lower.triangularView<Eigen::Lower>().solveInPlace(b);
  }

  /// Solves L^T x = b in place.
  template <typename Rhs> void solve_upper_in_place(Rhs &&b) const {
    lower.triangularView<Eigen::Lower>().transpose().solveInPlace(b);
  }
};

/// Relative pivot floor below which a Cholesky step counts as failed.
inline constexpr double kPivotFloor = 1e-13;

/// Cholesky with an escalating diagonal shift over
/// {0, jitter, 10 jitter, 100 jitter, 1000 jitter}.
inline Factorization robust_factorize(const Eigen::MatrixXd &m, double jitter) {
  if (m.rows() != m.cols()) {
    throw DimensionError("robust_factorize: matrix is not square");
  }
  const Index p = m.rows();
  const double scale = p > 0 ? std::max(m.diagonal().cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  const std::array<double, 5> ladder = {0.0, jitter, 10.0 * jitter,
                                        100.0 * jitter, 1000.0 * jitter};
  for (std::size_t step = 0; step < ladder.size(); ++step) {
    const double c = ladder[step];
    if (step > 0 && c == ladder[step - 1]) {
      continue;
    }
    Eigen::MatrixXd shifted = m;
    shifted.diagonal().array() += c;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) {
      continue;
    }
    Eigen::MatrixXd lower = llt.matrixL();
    const double min_pivot = p > 0 ? lower.diagonal().array().square().minCoeff() : 1.0;
    if (!std::isfinite(min_pivot) || min_pivot <= kPivotFloor * scale) {
      continue;
    }
    return {std::move(lower), c};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const auto &ev = eig.eigenvalues();
  std::ostringstream os;
  os << "robust_factorize: " << p << "x" << p
     << " matrix not positive definite at jitter " << ladder.back()
     << " (eigenvalues in [" << ev.minCoeff() << ", " << ev.maxCoeff()
     << "], condition ~" << ev.maxCoeff() / std::max(std::abs(ev.minCoeff()), 1e-300)
     << ")";
  throw NumericalError(os.str());
}

} // namespace gph

#endif // GPH_KERNEL_HPP
