#ifndef GPH_CODES_HPP
#define GPH_CODES_HPP

// Latent binary codes Y, the sparse pairwise similarity likelihood
// prod Phi(sigma_y * s_il * V_il) with V = Y Y^T, and the bit-by-bit Gibbs
// sampler whose conditional is Phi(gamma_ij * Y_ij) * p(S | Y).
//
// Pairs are kept between every training item and t representatives. A
// pair of two representatives R[p], R[q] appears twice in the dense n x t
// layout and is counted once, at row R[p], column q with p > q.

#include "gph/errors.hpp"
#include "gph/labels.hpp"
#include "gph/normal.hpp"
#include "gph/random.hpp"
#include "gph/types.hpp"

#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

namespace gph {

using CodeBits = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using InnerProducts = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SimilaritySet {
  std::vector<Index> representatives;  // t training indices
  std::vector<Index> rep_position;     // n entries, -1 for non-representatives
  CodeBits labels;                     // n x t, s in {-1, +1}, 0 on self pairs
  double sigma_y = 1.0;

  [[nodiscard]] Index n() const { return labels.rows(); }
  [[nodiscard]] Index t() const { return labels.cols(); }

  /// Whether (row i, column q) is the single stored copy of its pair.
  [[nodiscard]] bool counted(Index i, Index q) const {
    if (representatives[static_cast<std::size_t>(q)] == i) {
      return false;
    }
    const Index p = rep_position[static_cast<std::size_t>(i)];
    return p < 0 || p > q;
  }

  [[nodiscard]] std::size_t pair_count() const {
    std::size_t c = 0;
    for (Index i = 0; i < n(); ++i) {
      for (Index q = 0; q < t(); ++q) {
        c += counted(i, q) ? 1 : 0;
      }
    }
    return c;
  }
};

/// s_il = +1 when item i and representative l share a label, else -1.
/// `labels` must be aligned with training rows.
inline SimilaritySet derive_similarities(const LabelSet &labels,
                                         const std::vector<Index> &representatives,
                                         double sigma_y) {
  const auto n = static_cast<Index>(labels.size());
  if (n == 0) {
    throw UsageError("derive_similarities: empty label set");
  }
  if (!(sigma_y >= 0.0) || !std::isfinite(sigma_y)) {
    throw UsageError("derive_similarities: sigma_y must be finite and nonnegative");
  }
  SimilaritySet ss;
  ss.representatives = representatives;
  ss.sigma_y = sigma_y;
  ss.rep_position.assign(static_cast<std::size_t>(n), -1);
  const auto t = static_cast<Index>(representatives.size());
  for (Index q = 0; q < t; ++q) {
    const Index l = representatives[static_cast<std::size_t>(q)];
    if (l < 0 || l >= n) {
      throw UsageError("derive_similarities: representative index out of range");
    }
    if (ss.rep_position[static_cast<std::size_t>(l)] >= 0) {
      throw UsageError("derive_similarities: duplicate representative");
    }
    ss.rep_position[static_cast<std::size_t>(l)] = q;
  }
  ss.labels.resize(n, t);
  for (Index i = 0; i < n; ++i) {
    for (Index q = 0; q < t; ++q) {
      const Index l = representatives[static_cast<std::size_t>(q)];
      ss.labels(i, q) = i == l ? 0
                        : relevant(static_cast<std::size_t>(i), static_cast<std::size_t>(l), labels)
                            ? 1
                            : -1;
    }
  }
  return ss;
}

class CodeMatrix {
public:
  CodeMatrix() = default;

  CodeMatrix(CodeBits y, std::vector<Index> representatives)
      : y_(std::move(y)), reps_(std::move(representatives)) {
    for (Index i = 0; i < y_.rows(); ++i) {
      for (Index j = 0; j < y_.cols(); ++j) {
        if (y_(i, j) != 1 && y_(i, j) != -1) {
          throw UsageError("CodeMatrix: entries must be +1 or -1");
        }
      }
    }
    for (const Index l : reps_) {
      if (l < 0 || l >= y_.rows()) {
        throw UsageError("CodeMatrix: representative index out of range");
      }
    }
    v_ = recompute_inner_products();
  }

  [[nodiscard]] Index n() const { return y_.rows(); }
  [[nodiscard]] Index m() const { return y_.cols(); }
  [[nodiscard]] Index t() const { return static_cast<Index>(reps_.size()); }
  [[nodiscard]] const CodeBits &bits() const { return y_; }
  [[nodiscard]] const InnerProducts &inner_products() const { return v_; }
  [[nodiscard]] const std::vector<Index> &representatives() const { return reps_; }
  [[nodiscard]] std::int8_t operator()(Index i, Index j) const { return y_(i, j); }

  /// V[i][q] = Y_i . Y_{R[q]} from scratch.
  [[nodiscard]] InnerProducts recompute_inner_products() const {
    InnerProducts v(n(), t());
    for (Index i = 0; i < n(); ++i) {
      for (Index q = 0; q < t(); ++q) {
        const Index l = reps_[static_cast<std::size_t>(q)];
        std::int32_t s = 0;
        for (Index j = 0; j < m(); ++j) {
          s += y_(i, j) * y_(l, j);
        }
        v(i, q) = s;
      }
    }
    return v;
  }

  [[nodiscard]] bool cache_consistent() const { return v_ == recompute_inner_products(); }

  /// Sets Y_ij and updates the cached inner products in O(t), or O(t + n)
  /// when i is a representative.
  void set(Index i, Index j, std::int8_t value, Index rep_pos_of_i) {
    const std::int8_t old = y_(i, j);
    if (old == value) {
      return;
    }
    const int delta = value - old;
    y_(i, j) = value;
    for (Index q = 0; q < t(); ++q) {
      const Index l = reps_[static_cast<std::size_t>(q)];
      if (l != i) {
        v_(i, q) += delta * y_(l, j);
      }
    }
    if (rep_pos_of_i >= 0) {
      for (Index k = 0; k < n(); ++k) {
        if (k != i) {
          v_(k, rep_pos_of_i) += delta * y_(k, j);
        }
      }
    }
  }

private:
  CodeBits y_;
  std::vector<Index> reps_;
  InnerProducts v_;
};

inline void check_compatible(const CodeMatrix &cm, const SimilaritySet &ss) {
  if (cm.n() != ss.n() || cm.representatives() != ss.representatives) {
    throw UsageError("code matrix and similarity set disagree on items or representatives");
  }
}

/// Sum over stored pairs of log Phi(sigma_y * s_il * V_il).
inline double similarity_loglik(const CodeMatrix &cm, const SimilaritySet &ss) {
  check_compatible(cm, ss);
  const auto &v = cm.inner_products();
  double total = 0.0;
  for (Index i = 0; i < ss.n(); ++i) {
    for (Index q = 0; q < ss.t(); ++q) {
      if (ss.counted(i, q)) {
        total += normal::log_cdf(ss.sigma_y * ss.labels(i, q) * v(i, q));
      }
    }
  }
  return total;
}

/// p(Y_ij = +1 | rest) under Phi(gamma * Y_ij) * p(S | Y).
inline double gibbs_conditional(const CodeMatrix &cm, Index i, Index j, double gamma,
                                const SimilaritySet &ss) {
  const auto &y = cm.bits();
  const auto &v = cm.inner_products();
  const std::int8_t cur = y(i, j);
  double lp_plus = normal::log_cdf(gamma);
  double lp_minus = normal::log_cdf(-gamma);
  for (Index q = 0; q < ss.t(); ++q) {
    const Index l = ss.representatives[static_cast<std::size_t>(q)];
    if (l == i) {
      continue;
    }
    const int ylj = y(l, j);
    const int rest = v(i, q) - cur * ylj;
    const double s = ss.sigma_y * ss.labels(i, q);
    lp_plus += normal::log_cdf(s * (rest + ylj));
    lp_minus += normal::log_cdf(s * (rest - ylj));
  }
  const Index p = ss.rep_position[static_cast<std::size_t>(i)];
  if (p >= 0) {
    for (Index k = 0; k < ss.n(); ++k) {
      // Pairs with other representatives were visited in the row loop.
      if (k == i || ss.rep_position[static_cast<std::size_t>(k)] >= 0) {
        continue;
      }
      const int ykj = y(k, j);
      const int rest = v(k, p) - cur * ykj;
      const double s = ss.sigma_y * ss.labels(k, p);
      lp_plus += normal::log_cdf(s * (rest + ykj));
      lp_minus += normal::log_cdf(s * (rest - ykj));
    }
  }
  return 1.0 / (1.0 + std::exp(lp_minus - lp_plus));
}

/// Resamples Y_ij using the uniform draw u in [0, 1). Returns whether the
/// entry changed.
inline bool gibbs_entry(CodeMatrix &cm, Index i, Index j, double gamma,
                        const SimilaritySet &ss, double u) {
  const double p_plus = gibbs_conditional(cm, i, j, gamma, ss);
  const std::int8_t next = u < p_plus ? 1 : -1;
  const bool flipped = next != cm(i, j);
  cm.set(i, j, next, ss.rep_position[static_cast<std::size_t>(i)]);
  return flipped;
}

/// One pass over every entry, row-major unless `randomized_scan`. Returns
/// the number of flipped entries.
inline std::size_t gibbs_sweep(CodeMatrix &cm, const Matrix &gamma, const SimilaritySet &ss,
                               Rng &rng, bool randomized_scan = false) {
  check_compatible(cm, ss);
  if (gamma.rows() != cm.n() || gamma.cols() != cm.m()) {
    std::ostringstream os;
    os << "gibbs_sweep: gamma is " << gamma.rows() << "x" << gamma.cols()
       << ", codes are " << cm.n() << "x" << cm.m();
    throw DimensionError(os.str());
  }
  const Index total = cm.n() * cm.m();
  std::vector<std::int64_t> order;
  if (randomized_scan) {
    order = sample_without_replacement(rng, total, total);
  }
  std::size_t flips = 0;
  for (Index e = 0; e < total; ++e) {
    const Index flat = randomized_scan ? order[static_cast<std::size_t>(e)] : e;
    const Index i = flat / cm.m();
    const Index j = flat % cm.m();
    const double u = uniform01(rng);
    flips += gibbs_entry(cm, i, j, gamma(i, j), ss, u) ? 1 : 0;
  }
  return flips;
}

} // namespace gph

#endif // GPH_CODES_HPP
