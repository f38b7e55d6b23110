#ifndef GPH_TRAINER_HPP
#define GPH_TRAINER_HPP

// Alternating inference: per-bit EP on the current code columns (bits run
// in parallel), then one Gibbs sweep over the code matrix using the EP
// cavity predictions as code priors. Ends with extra EP passes on the
// frozen codes and reads the hash weights off the posteriors.

#include "gph/codes.hpp"
#include "gph/data.hpp"
#include "gph/errors.hpp"
#include "gph/gp.hpp"
#include "gph/hash.hpp"
#include "gph/labels.hpp"
#include "gph/parallel.hpp"
#include "gph/random.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gph {

struct TrainConfig {
  Index num_bits = 16;
  Index num_inducing = 1000;
  Index num_representatives = 5000;
  std::optional<double> sigma_y;  // 2 / num_bits when unset
  KernelConfig kernel;
  int max_sweeps = 50;
  int ep_inner_passes = 1;
  double damping = 0.9;
  Index block_size = 1000;
  std::uint64_t seed = 0;
  int code_freeze_patience = 3;  // 0 disables early stopping
  int workers = 1;
  bool reset_sites_each_sweep = false;
  bool randomized_scan = false;

  [[nodiscard]] double effective_sigma_y() const {
    return sigma_y.value_or(2.0 / static_cast<double>(num_bits));
  }

  void validate() const {
    const auto bad = [](const std::string &what) { throw UsageError("train config: " + what); };
    if (num_bits < 1) bad("num_bits must be >= 1");
    if (num_inducing < 1) bad("num_inducing must be >= 1");
    if (num_representatives < 1) bad("num_representatives must be >= 1");
    if (sigma_y && !(*sigma_y > 0.0 && std::isfinite(*sigma_y))) bad("sigma_y must be positive");
    if (max_sweeps < 1) bad("max_sweeps must be >= 1");
    if (ep_inner_passes < 1) bad("ep_inner_passes must be >= 1");
    if (!(damping > 0.0 && damping <= 1.0)) bad("damping must lie in (0, 1]");
    if (block_size < 1) bad("block_size must be >= 1");
    if (code_freeze_patience < 0) bad("code_freeze_patience must be >= 0");
    if (workers < 1) bad("workers must be >= 1");
    kernel.validate();
  }
};

/// Site-delta tolerance of the early-stop rule.
inline constexpr double kSiteDeltaTolerance = 1e-4;

struct SweepRecord {
  int sweep = 0;
  double similarity_loglik = 0.0;
  std::size_t gibbs_flips = 0;
  double max_site_delta = 0.0;
  std::size_t skipped_cavities = 0;
  double wall_seconds = 0.0;
};

enum class StopReason { converged, max_sweeps };

struct TrainReport {
  std::vector<SweepRecord> sweeps;
  StopReason stop_reason = StopReason::max_sweeps;
  int jitter_escalations = 0;
  double sigma_y = 0.0;
  bool sigma_y_defaulted = false;
  Index n = 0;
  Index r = 0;
  Index t = 0;
  double final_max_site_delta = 0.0;
};

struct TrainResult {
  HashModel model;
  TrainReport report;
  CodeMatrix codes;
  std::vector<Index> inducing;
  std::vector<Index> representatives;
};

namespace detail {

inline std::vector<Index> sample_indices(Index n, Index k, Rng &rng, const char *what,
                                         const MessageSink &log) {
  if (n < 1) {
    throw UsageError(std::string(what) + ": empty dataset");
  }
  if (k < 1) {
    throw UsageError(std::string(what) + ": count must be >= 1");
  }
  if (k > n) {
    if (log) {
      log(std::string("warning: ") + what + ": requested " + std::to_string(k) +
          " exceeds n = " + std::to_string(n) + ", clamped");
    }
    k = n;
  }
  const auto drawn = sample_without_replacement(rng, n, k);
  return {drawn.begin(), drawn.end()};
}

} // namespace detail

/// r distinct indices, uniformly without replacement.
inline std::vector<Index> select_inducing(Index n, Index r, Rng &rng, const MessageSink &log = {}) {
  return detail::sample_indices(n, r, rng, "select_inducing", log);
}

/// t distinct indices, drawn independently of the inducing set.
inline std::vector<Index> select_representatives(Index n, Index t, Rng &rng,
                                                 const MessageSink &log = {}) {
  return detail::sample_indices(n, t, rng, "select_representatives", log);
}

/// i.i.d. uniform +-1 codes.
inline CodeMatrix init_codes(Index n, Index m, std::vector<Index> representatives, Rng &rng) {
  if (n < 1 || m < 1) {
    throw UsageError("init_codes: need n >= 1 and m >= 1");
  }
  CodeBits y(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      y(i, j) = (rng() >> 63) ? 1 : -1;
    }
  }
  return CodeMatrix(std::move(y), std::move(representatives));
}

namespace detail {

struct BitPhaseResult {
  double max_site_delta = 0.0;
  std::size_t skipped = 0;
};

inline std::vector<std::int8_t> code_column(const CodeMatrix &codes, Index j) {
  std::vector<std::int8_t> col(static_cast<std::size_t>(codes.n()));
  for (Index i = 0; i < codes.n(); ++i) {
    col[static_cast<std::size_t>(i)] = codes(i, j);
  }
  return col;
}

/// `passes` EP passes for every bit on the current codes, bits in parallel.
inline BitPhaseResult ep_phase(std::vector<BitPosterior> &bits, const CodeMatrix &codes,
                               const TrainConfig &cfg, int passes, int sweep) {
  const auto m = bits.size();
  std::vector<BitPhaseResult> per_bit(m);
  parallel_for(m, cfg.workers, [&](std::size_t j) {
    const auto labels = code_column(codes, static_cast<Index>(j));
    try {
      for (int pass = 0; pass < passes; ++pass) {
        const SweepStats s = ep_sweep(bits[j], labels, cfg.damping, cfg.block_size);
        per_bit[j].max_site_delta = std::max(per_bit[j].max_site_delta, s.max_site_delta);
        per_bit[j].skipped += s.skipped;
      }
    } catch (const NumericalError &e) {
      std::ostringstream os;
      os << "sweep " << sweep << ", bit " << j << ": " << e.what();
      throw NumericalError(os.str());
    }
  });
  BitPhaseResult total;
  for (const auto &b : per_bit) {
    total.max_site_delta = std::max(total.max_site_delta, b.max_site_delta);
    total.skipped += b.skipped;
  }
  return total;
}

} // namespace detail

/// Learns an m-bit hash model. `labels` must cover every id of `data`.
inline TrainResult train(const FeatureDataset &data, const LabelSet &labels,
                         const TrainConfig &cfg, const MessageSink &log = {}) {
  cfg.validate();
  const Index n = data.n();
  if (n < 1) {
    throw UsageError("train: empty dataset");
  }
  if (labels.empty()) {
    throw UsageError("train: empty label set");
  }
  data.validate();
  const LabelSet aligned = labels.aligned_to(data.ids);
  const Index m = cfg.num_bits;

  TrainResult result;
  TrainReport &report = result.report;
  report.sigma_y = cfg.effective_sigma_y();
  report.sigma_y_defaulted = !cfg.sigma_y.has_value();
  if (log) {
    std::ostringstream os;
    os << std::setprecision(17) << "sigma_y = " << report.sigma_y
       << (report.sigma_y_defaulted ? " (default 2/m)" : "");
    log(os.str());
  }

  Rng rng(cfg.seed);
  result.inducing = select_inducing(n, cfg.num_inducing, rng, log);
  result.representatives = select_representatives(n, cfg.num_representatives, rng, log);
  const SimilaritySet ss = derive_similarities(aligned, result.representatives, report.sigma_y);
  result.codes = init_codes(n, m, result.representatives, rng);
  report.n = n;
  report.r = static_cast<Index>(result.inducing.size());
  report.t = static_cast<Index>(result.representatives.size());

  Matrix inducing_inputs(report.r, data.d());
  for (Index l = 0; l < report.r; ++l) {
    inducing_inputs.row(l) = data.features.row(result.inducing[static_cast<std::size_t>(l)]);
  }
  auto prior = std::make_shared<const FitcPrior>(
      build_fitc_prior(data.features, inducing_inputs, cfg.kernel));
  if (prior->inducing.jitter_used > 0.0) {
    ++report.jitter_escalations;
    if (log) {
      std::ostringstream os;
      os << "inducing covariance needed jitter " << prior->inducing.jitter_used;
      log(os.str());
    }
  }
  const BitPosterior blank(prior);
  std::vector<BitPosterior> bits(static_cast<std::size_t>(m), blank);

  int quiet_sweeps = 0;
  Matrix gamma(n, m);
  for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto start = std::chrono::steady_clock::now();
    if (cfg.reset_sites_each_sweep) {
      std::fill(bits.begin(), bits.end(), blank);
    }
    const auto ep = detail::ep_phase(bits, result.codes, cfg, cfg.ep_inner_passes, sweep);
    for (Index j = 0; j < m; ++j) {
      gamma.col(j) = gamma_params(bits[static_cast<std::size_t>(j)]);
    }
    const std::size_t flips =
        gibbs_sweep(result.codes, gamma, ss, rng, cfg.randomized_scan);

    SweepRecord rec;
    rec.sweep = sweep;
    rec.similarity_loglik = similarity_loglik(result.codes, ss);
    rec.gibbs_flips = flips;
    rec.max_site_delta = ep.max_site_delta;
    rec.skipped_cavities = ep.skipped;
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.sweeps.push_back(rec);
    if (log) {
      std::ostringstream os;
      os << "sweep " << sweep << ": loglik=" << rec.similarity_loglik << " flips=" << flips
         << " max_site_delta=" << rec.max_site_delta << " skipped=" << rec.skipped_cavities
         << " time=" << std::fixed << std::setprecision(3) << rec.wall_seconds << "s";
      log(os.str());
    }

    quiet_sweeps = flips == 0 ? quiet_sweeps + 1 : 0;
    if (cfg.code_freeze_patience > 0 && quiet_sweeps >= cfg.code_freeze_patience &&
        ep.max_site_delta < kSiteDeltaTolerance) {
      report.stop_reason = StopReason::converged;
      break;
    }
  }

  const auto refine =
      detail::ep_phase(bits, result.codes, cfg, 2 * cfg.ep_inner_passes, cfg.max_sweeps + 1);
  report.final_max_site_delta = refine.max_site_delta;
  for (const auto &b : bits) {
    report.jitter_escalations += b.jitter_escalations;
  }
  if (log) {
    log(std::string("stopped: ") +
        (report.stop_reason == StopReason::converged ? "converged" : "max_sweeps") + " after " +
        std::to_string(report.sweeps.size()) + " sweeps");
  }

  result.model.inducing_inputs = std::move(inducing_inputs);
  result.model.weights = extract_weights(bits);
  result.model.kernel = cfg.kernel;
  result.model.seed = cfg.seed;
  return result;
}

/// Per-sweep records as CSV with a header row.
inline std::string report_csv(const TrainReport &r) {
  std::ostringstream os;
  os << std::setprecision(17)
     << "sweep,similarity_loglik,gibbs_flips,max_site_delta,skipped_cavities,wall_seconds\n";
  for (const auto &s : r.sweeps) {
    os << s.sweep << ',' << s.similarity_loglik << ',' << s.gibbs_flips << ','
       << s.max_site_delta << ',' << s.skipped_cavities << ',' << s.wall_seconds << '\n';
  }
  return os.str();
}

/// Flat `key = value` summary.
inline std::string report_summary(const TrainReport &r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "n = " << r.n << "\nr = " << r.r << "\nt = " << r.t << '\n';
  os << "sigma_y = " << r.sigma_y << '\n';
  os << "sweeps = " << r.sweeps.size() << '\n';
  os << "stop_reason = " << (r.stop_reason == StopReason::converged ? "converged" : "max_sweeps")
     << '\n';
  os << "jitter_escalations = " << r.jitter_escalations << '\n';
  os << "final_max_site_delta = " << r.final_max_site_delta << '\n';
  return os.str();
}

} // namespace gph

#endif // GPH_TRAINER_HPP
