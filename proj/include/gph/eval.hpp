#ifndef GPH_EVAL_HPP
#define GPH_EVAL_HPP

// Leave-one-out retrieval evaluation over a Hamming index: every item
// queries all others, ranked by distance with ascending-id tie-break.

#include "gph/errors.hpp"
#include "gph/hash.hpp"
#include "gph/labels.hpp"
#include "gph/parallel.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace gph {

inline constexpr std::size_t kCurvePoints = 11;

struct CurvePoint {
  double recall = 0.0;
  double precision = 0.0;
};

struct EvalReport {
  double mean_average_precision = 0.0;
  double precision_at_radius = 0.0;
  int radius = 2;
  std::vector<CurvePoint> pr_curve;   // recall 0.0, 0.1, ..., 1.0
  std::vector<double> per_query_ap;   // one entry per item, in index order
  std::vector<bool> has_relevant;     // whether that query counts toward mAP
  std::size_t query_count = 0;
  std::size_t map_query_count = 0;
};

/// Mean of precision@k over the positions of relevant items, normalized
/// by `total_relevant`; zero when there is nothing relevant.
inline double average_precision(std::span<const std::uint8_t> relevant_by_rank,
                                std::size_t total_relevant) {
  if (total_relevant == 0) {
    return 0.0;
  }
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < relevant_by_rank.size(); ++k) {
    if (relevant_by_rank[k]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  return sum / static_cast<double>(total_relevant);
}

namespace detail {

struct QueryResult {
  double ap = 0.0;
  double precision_at_radius = 0.0;
  bool has_relevant = false;
  std::array<double, kCurvePoints> curve{};
};

inline QueryResult evaluate_query(const HammingIndex &index, const LabelSet &labels,
                                  std::span<const std::size_t> label_pos,
                                  std::span<const std::size_t> by_id, std::size_t query,
                                  int radius) {
  const auto m = static_cast<std::size_t>(index.code_length());
  // Counting sort by distance; by_id order makes ties ascend by id.
  std::vector<std::vector<std::size_t>> buckets(m + 1);
  const auto &qcode = index.code_at(query);
  for (const std::size_t p : by_id) {
    if (p != query) {
      buckets[static_cast<std::size_t>(hamming(qcode, index.code_at(p)))].push_back(p);
    }
  }
  std::vector<std::uint8_t> rel;
  rel.reserve(index.size() - 1);
  std::size_t within = 0;
  std::size_t within_rel = 0;
  for (std::size_t dist = 0; dist <= m; ++dist) {
    for (const std::size_t p : buckets[dist]) {
      const bool r = relevant(label_pos[query], label_pos[p], labels);
      rel.push_back(r ? 1 : 0);
      if (static_cast<int>(dist) <= radius) {
        ++within;
        within_rel += r ? 1 : 0;
      }
    }
  }
  const auto total = static_cast<std::size_t>(std::count(rel.begin(), rel.end(), std::uint8_t{1}));
  QueryResult out;
  out.has_relevant = total > 0;
  out.ap = average_precision(rel, total);
  out.precision_at_radius =
      within == 0 ? 0.0 : static_cast<double>(within_rel) / static_cast<double>(within);
  if (total > 0) {
    // Interpolated precision: best precision at any recall >= level.
    std::vector<double> best_from(rel.size() + 1, 0.0);
    std::vector<double> recall_at(rel.size(), 0.0);
    std::size_t hits = 0;
    for (std::size_t k = 0; k < rel.size(); ++k) {
      hits += rel[k] ? 1 : 0;
      recall_at[k] = static_cast<double>(hits) / static_cast<double>(total);
    }
    hits = total;
    for (std::size_t k = rel.size(); k-- > 0;) {
      const double prec = static_cast<double>(hits) / static_cast<double>(k + 1);
      best_from[k] = std::max(best_from[k + 1], prec);
      hits -= rel[k] ? 1 : 0;
    }
    for (std::size_t c = 0; c < kCurvePoints; ++c) {
      const double level = static_cast<double>(c) / 10.0;
      const auto it = std::lower_bound(recall_at.begin(), recall_at.end(), level - 1e-12);
      const auto k = static_cast<std::size_t>(it - recall_at.begin());
      out.curve[c] = k < rel.size() ? best_from[k] : 0.0;
    }
  }
  return out;
}

} // namespace detail

/// Leave-one-out evaluation; `labels` must cover every indexed id.
inline EvalReport evaluate(const HammingIndex &index, const LabelSet &labels, int radius = 2,
                           int workers = 1) {
  if (index.size() < 2) {
    throw UsageError("evaluate: need at least 2 indexed items");
  }
  if (radius < 0) {
    throw UsageError("evaluate: radius must be nonnegative");
  }
  const std::size_t n = index.size();
  std::vector<std::size_t> label_pos(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto pos = labels.position_of(index.ids()[p]);
    if (!pos) {
      throw UsageError("evaluate: no labels for item id " + std::to_string(index.ids()[p]));
    }
    label_pos[p] = *pos;
  }
  std::vector<std::size_t> by_id(n);
  std::iota(by_id.begin(), by_id.end(), std::size_t{0});
  std::sort(by_id.begin(), by_id.end(),
            [&](std::size_t a, std::size_t b) { return index.ids()[a] < index.ids()[b]; });

  std::vector<detail::QueryResult> results(n);
  parallel_for(n, workers, [&](std::size_t q) {
    results[q] = detail::evaluate_query(index, labels, label_pos, by_id, q, radius);
  });

  EvalReport report;
  report.radius = radius;
  report.query_count = n;
  report.per_query_ap.resize(n);
  report.has_relevant.resize(n);
  std::array<double, kCurvePoints> curve{};
  double ap_sum = 0.0;
  double prec_sum = 0.0;
  for (std::size_t q = 0; q < n; ++q) {
    const auto &r = results[q];
    report.per_query_ap[q] = r.ap;
    report.has_relevant[q] = r.has_relevant;
    prec_sum += r.precision_at_radius;
    if (r.has_relevant) {
      ++report.map_query_count;
      ap_sum += r.ap;
      for (std::size_t c = 0; c < kCurvePoints; ++c) {
        curve[c] += r.curve[c];
      }
    }
  }
  const double denom = static_cast<double>(std::max<std::size_t>(report.map_query_count, 1));
  report.mean_average_precision = ap_sum / denom;
  report.precision_at_radius = prec_sum / static_cast<double>(n);
  report.pr_curve.resize(kCurvePoints);
  for (std::size_t c = 0; c < kCurvePoints; ++c) {
    report.pr_curve[c] = {static_cast<double>(c) / 10.0, curve[c] / denom};
  }
  return report;
}

/// Flat `key = value` block.
inline std::string to_key_value(const EvalReport &r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "queries = " << r.query_count << '\n';
  os << "map_queries = " << r.map_query_count << '\n';
  os << "map = " << r.mean_average_precision << '\n';
  os << "radius = " << r.radius << '\n';
  os << "precision_at_radius = " << r.precision_at_radius << '\n';
  return os.str();
}

/// CSV with header `recall,precision`.
inline std::string pr_curve_csv(const EvalReport &r) {
  std::ostringstream os;
  os << std::setprecision(17) << "recall,precision\n";
  for (const auto &p : r.pr_curve) {
    os << p.recall << ',' << p.precision << '\n';
  }
  return os.str();
}

} // namespace gph

#endif // GPH_EVAL_HPP
