#ifndef GPH_GP_HPP
#define GPH_GP_HPP

// Per-bit sparse (FITC) Gaussian process classifier with a probit link,
// approximated by expectation propagation.
//
// The prior covariance of the n latent values is D + V V^T, where
// V = K_fu L^{-T} (L L^T = K_uu) and D = diag(K_ff - Q_ff). Writing
// f = g + V u with g ~ N(0, D) and u ~ N(0, I), all posterior quantities
// reduce to the r x r matrix M = I + V^T diag(omega) V with
// omega_i = tau_i / (1 + tau_i D_i), so one refresh costs O(n r^2) and
// stays finite for zero sites and for zero diagonal corrections alike.

#include "gph/errors.hpp"
#include "gph/kernel.hpp"
#include "gph/normal.hpp"
#include "gph/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <vector>

namespace gph {

struct FitcPrior {
  Matrix inducing_inputs;  // r x d
  Matrix cross_cov;        // K_fu, n x r
  Factorization inducing;  // chol(K_uu + c I)
  Matrix whitened;         // V = K_fu L^{-T}, n x r
  Vector diag_correction;  // diag(K_ff - Q_ff), clamped to >= 0
  Vector prior_diag;       // Q_ii + D_i
  KernelConfig kernel;

  [[nodiscard]] Index n() const { return cross_cov.rows(); }
  [[nodiscard]] Index r() const { return cross_cov.cols(); }
};

inline FitcPrior build_fitc_prior(const Matrix &x, const Matrix &inducing,
                                  const KernelConfig &cfg) {
  cfg.validate();
  if (x.rows() < 1 || inducing.rows() < 1) {
    throw UsageError("build_fitc_prior: need at least one training and one inducing point");
  }
  if (x.cols() != inducing.cols()) {
    std::ostringstream os;
    os << "build_fitc_prior: feature dimension " << x.cols()
       << " does not match inducing dimension " << inducing.cols();
    throw DimensionError(os.str());
  }
  FitcPrior p;
  p.kernel = cfg;
  p.inducing_inputs = inducing;
  p.cross_cov = gram_matrix(x, inducing, cfg);
  const Eigen::MatrixXd kuu = gram_matrix(inducing, inducing, cfg);
  p.inducing = robust_factorize(kuu, cfg.jitter);

  Eigen::MatrixXd vt = p.cross_cov.transpose();
  p.inducing.solve_lower_in_place(vt);
  p.whitened = vt.transpose();

  const Index n = x.rows();
  const double kii = cfg.signal_variance();
  p.diag_correction.resize(n);
  p.prior_diag.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double q = p.whitened.row(i).squaredNorm();
    p.diag_correction[i] = std::max(0.0, kii - q);
    p.prior_diag[i] = q + p.diag_correction[i];
  }
  return p;
}

/// EP site approximations N(nu/tau, 1/tau) in natural parameters.
struct SiteParams {
  Vector precision;       // tau
  Vector mean_precision;  // nu

  static SiteParams zeros(Index n) {
    return {Vector::Zero(n), Vector::Zero(n)};
  }
};

struct BitPosterior {
  std::shared_ptr<const FitcPrior> prior;
  SiteParams sites;
  Vector marginal_mean;
  Vector marginal_var;
  Vector inducing_weights;  // alpha; predictive mean is k_u(x)^T alpha
  Factorization reduced;    // chol(M)
  int jitter_escalations = 0;

  BitPosterior() = default;
  explicit BitPosterior(std::shared_ptr<const FitcPrior> p);
};

/// Recomputes marginals and inducing weights from the current sites.
inline void refresh_posterior(BitPosterior &bp) {
  const FitcPrior &pr = *bp.prior;
  const Index n = pr.n();
  const Index r = pr.r();
  const Vector &tau = bp.sites.precision;
  const Vector &nu = bp.sites.mean_precision;
  const Vector &dcorr = pr.diag_correction;

  Vector a(n), omega(n), nu_a(n);
  for (Index i = 0; i < n; ++i) {
    a[i] = 1.0 / (1.0 + tau[i] * dcorr[i]);
    omega[i] = tau[i] * a[i];
    nu_a[i] = nu[i] * a[i];
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(r, r);
  const Matrix weighted = pr.whitened.array().colwise() * omega.array();
  m.noalias() += pr.whitened.transpose() * weighted;
  bp.reduced = robust_factorize(m, pr.kernel.jitter);
  if (bp.reduced.jitter_used > 0.0) {
    ++bp.jitter_escalations;
  }

  Vector mu_u = pr.whitened.transpose() * nu_a;
  bp.reduced.solve_lower_in_place(mu_u);
  bp.reduced.solve_upper_in_place(mu_u);

  bp.inducing_weights = mu_u;
  pr.inducing.solve_upper_in_place(bp.inducing_weights);

  Eigen::MatrixXd z = pr.whitened.transpose();
  bp.reduced.solve_lower_in_place(z);

  const Vector proj = pr.whitened * mu_u;
  bp.marginal_mean.resize(n);
  bp.marginal_var.resize(n);
  for (Index i = 0; i < n; ++i) {
    bp.marginal_mean[i] = a[i] * (proj[i] + dcorr[i] * nu[i]);
    bp.marginal_var[i] = dcorr[i] * a[i] + a[i] * a[i] * z.col(i).squaredNorm();
  }
}

inline BitPosterior::BitPosterior(std::shared_ptr<const FitcPrior> p)
    : prior(std::move(p)), sites(SiteParams::zeros(prior->n())) {
  refresh_posterior(*this);
}

/// Leave-one-site-out distribution.
struct Cavity {
  double mean = 0.0;
  double var = 1.0;
};

/// Empty when the cavity variance would be nonpositive; the caller skips
/// that site.
inline std::optional<Cavity> cavity_of(const BitPosterior &bp, Index i) {
  const double v = bp.marginal_var[i];
  const double tau = bp.sites.precision[i];
  const double inv = 1.0 / v - tau;
  if (!(v * tau < 1.0) || !(inv > 0.0)) {
    return std::nullopt;
  }
  Cavity c;
  c.var = 1.0 / inv;
  c.mean = c.var * (bp.marginal_mean[i] / v - bp.sites.mean_precision[i]);
  return c;
}

struct ProbitMoments {
  double log_norm = 0.0;
  double mean = 0.0;
  double var = 0.0;
};

/// Moments of Phi(y f) N(f | cav.mean, cav.var), normalized.
inline ProbitMoments probit_moments(int y, const Cavity &cav) {
  const double s = std::sqrt(1.0 + cav.var);
  const double z = y * cav.mean / s;
  const double ratio = normal::pdf_over_cdf(z);
  ProbitMoments out;
  out.log_norm = normal::log_cdf(z);
  out.mean = cav.mean + y * cav.var * ratio / s;
  out.var = cav.var - cav.var * cav.var * ratio * (z + ratio) / (1.0 + cav.var);
  return out;
}

struct SweepStats {
  double max_site_delta = 0.0;
  std::size_t skipped = 0;
};

/// One serial EP pass over all points in index order. Marginals are
/// updated locally after each site; refresh_posterior runs after every
/// `block_size` points (0 means once at the end).
inline SweepStats ep_sweep(BitPosterior &bp, std::span<const std::int8_t> labels,
                           double damping, Index block_size = 0) {
  const Index n = bp.prior->n();
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionError("ep_sweep: label count does not match posterior size");
  }
  if (!(damping > 0.0 && damping <= 1.0)) {
    throw UsageError("ep_sweep: damping must lie in (0, 1]");
  }
  if (block_size <= 0) {
    block_size = n;
  }
  SweepStats stats;
  Vector &tau = bp.sites.precision;
  Vector &nu = bp.sites.mean_precision;
  for (Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 1 && y != -1) {
      throw UsageError("ep_sweep: labels must be +1 or -1");
    }
    if (const auto cav = cavity_of(bp, i)) {
      const ProbitMoments mom = probit_moments(y, *cav);
      double tau_new = 1.0 / mom.var - 1.0 / cav->var;
      double nu_new = mom.mean / mom.var - cav->mean / cav->var;
      if (!(tau_new >= 0.0)) {
        tau_new = 0.0;
        nu_new = 0.0;
      }
      const double tau_damped = (1.0 - damping) * tau[i] + damping * tau_new;
      const double nu_damped = (1.0 - damping) * nu[i] + damping * nu_new;
      stats.max_site_delta = std::max(
          {stats.max_site_delta, std::abs(tau_damped - tau[i]), std::abs(nu_damped - nu[i])});
      tau[i] = tau_damped;
      nu[i] = nu_damped;
      const double prec = 1.0 / cav->var + tau[i];
      bp.marginal_var[i] = 1.0 / prec;
      bp.marginal_mean[i] = (cav->mean / cav->var + nu[i]) / prec;
    } else {
      ++stats.skipped;
    }
    if ((i + 1) % block_size == 0 || i + 1 == n) {
      refresh_posterior(bp);
    }
  }
  return stats;
}

/// Cavity-predictive probit parameters; Phi(gamma_i * y) approximates
/// p(y_i = y | all other labels of this bit).
inline Vector gamma_params(const BitPosterior &bp) {
  const Index n = bp.prior->n();
  Vector g(n);
  for (Index i = 0; i < n; ++i) {
    if (const auto cav = cavity_of(bp, i)) {
      g[i] = cav->mean / std::sqrt(1.0 + cav->var);
    } else {
      g[i] = bp.marginal_mean[i] / std::sqrt(1.0 + bp.marginal_var[i]);
    }
  }
  return g;
}

/// Hash weights: column j holds the inducing weights of bit j.
inline Matrix extract_weights(std::span<const BitPosterior> bits) {
  if (bits.empty()) {
    return Matrix(0, 0);
  }
  const auto &shared = bits.front().prior;
  Matrix w(shared->r(), static_cast<Index>(bits.size()));
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if (bits[j].prior != shared) {
      throw UsageError("extract_weights: bits do not share one FITC prior");
    }
    w.col(static_cast<Index>(j)) = bits[j].inducing_weights;
  }
  return w;
}

struct Prediction {
  double mean = 0.0;
  double var = 0.0;
  double p_plus = 0.5;
};

inline Prediction predict(const BitPosterior &bp, std::span<const double> x) {
  const FitcPrior &pr = *bp.prior;
  if (static_cast<Index>(x.size()) != pr.inducing_inputs.cols()) {
    std::ostringstream os;
    os << "predict: query dimension " << x.size() << " does not match model dimension "
       << pr.inducing_inputs.cols();
    throw DimensionError(os.str());
  }
  const Index r = pr.r();
  Vector k(r);
  for (Index l = 0; l < r; ++l) {
    k[l] = kernel_eval(x, row_span(pr.inducing_inputs, l), pr.kernel);
  }
  Prediction out;
  out.mean = detail::dot({k.data(), static_cast<std::size_t>(r)},
                         {bp.inducing_weights.data(), static_cast<std::size_t>(r)});
  Vector w = k;
  pr.inducing.solve_lower_in_place(w);
  Vector z = w;
  bp.reduced.solve_lower_in_place(z);
  const double kxx = kernel_eval(x, x, pr.kernel);
  out.var = std::max(kxx - w.squaredNorm() + z.squaredNorm(), pr.kernel.jitter);
  out.p_plus = normal::cdf(out.mean / std::sqrt(1.0 + out.var));
  return out;
}

} // namespace gph

#endif // GPH_GP_HPP
