#ifndef GPH_DATA_HPP
#define GPH_DATA_HPP

#include "gph/binary_io.hpp"
#include "gph/errors.hpp"
#include "gph/labels.hpp"
#include "gph/random.hpp"
#include "gph/types.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gph {

/// Receives human-readable log and warning lines; may be empty.
using MessageSink = std::function<void(const std::string &)>;

struct FeatureDataset {
  std::vector<ItemId> ids;
  Matrix features;  // n x d
  bool centered = false;
  bool unit_norm = false;

  [[nodiscard]] Index n() const { return features.rows(); }
  [[nodiscard]] Index d() const { return features.cols(); }

  void validate() const {
    if (static_cast<Index>(ids.size()) != features.rows()) {
      throw UsageError("dataset: id count does not match feature rows");
    }
    if (!features.allFinite()) {
      throw FormatError("dataset: non-finite feature value");
    }
  }
};

/// Centers every column at zero, then scales each row to unit length.
/// Rows that are zero after centering stay zero.
inline FeatureDataset normalize(const FeatureDataset &ds, const MessageSink &warn = {}) {
  FeatureDataset out = ds;
  if (ds.n() == 0) {
    out.centered = out.unit_norm = true;
    return out;
  }
  const Eigen::RowVectorXd mean = ds.features.colwise().mean();
  out.features.rowwise() -= mean;
  std::size_t zero_rows = 0;
  for (Index i = 0; i < out.n(); ++i) {
    const double norm = out.features.row(i).norm();
    if (norm > 0.0) {
      out.features.row(i) /= norm;
    } else {
      ++zero_rows;
    }
  }
  if (zero_rows > 0 && warn) {
    warn("normalize: " + std::to_string(zero_rows) + " row(s) are zero after centering");
  }
  out.centered = true;
  out.unit_norm = true;
  return out;
}

struct LabeledDataset {
  FeatureDataset data;
  LabelSet labels;
};

/// Gaussian blobs around class centers at unit radius: a regular polygon
/// in the first two coordinates when classes > d or d = 2, otherwise the
/// vertices of a centered regular simplex. Classes occupy contiguous id
/// ranges whose sizes differ by at most one.
inline LabeledDataset synthetic_clusters(Index n, int classes, Index d, double spread,
                                         std::uint64_t seed) {
  if (classes < 2) {
    throw UsageError("synthetic_clusters: need at least 2 classes");
  }
  if (n < 0 || d < 1) {
    throw UsageError("synthetic_clusters: need n >= 0 and d >= 1");
  }
  if (!(spread >= 0.0) || !std::isfinite(spread)) {
    throw UsageError("synthetic_clusters: spread must be finite and nonnegative");
  }
  Matrix centers = Matrix::Zero(classes, d);
  if (d == 1) {
    for (int c = 0; c < classes; ++c) {
      centers(c, 0) = -1.0 + 2.0 * c / (classes - 1);
    }
  } else if (d == 2 || classes > d) {
    for (int c = 0; c < classes; ++c) {
      const double angle = 2.0 * std::numbers::pi * c / classes;
      centers(c, 0) = std::cos(angle);
      centers(c, 1) = std::sin(angle);
    }
  } else {
    for (int c = 0; c < classes; ++c) {
      centers(c, c) = 1.0;
    }
    centers.rowwise() -= centers.colwise().mean().eval();
    for (int c = 0; c < classes; ++c) {
      centers.row(c).normalize();
    }
  }

  Rng rng(seed);
  LabeledDataset out;
  out.data.features.resize(n, d);
  out.data.ids.resize(static_cast<std::size_t>(n));
  std::vector<int> cls(static_cast<std::size_t>(n));
  const Index base = n / classes;
  const Index extra = n % classes;
  Index i = 0;
  for (int c = 0; c < classes; ++c) {
    const Index size = base + (c < extra ? 1 : 0);
    for (Index k = 0; k < size; ++k, ++i) {
      for (Index f = 0; f < d; ++f) {
        out.data.features(i, f) = centers(c, f) + spread * standard_normal(rng);
      }
      out.data.ids[static_cast<std::size_t>(i)] = static_cast<ItemId>(i);
      cls[static_cast<std::size_t>(i)] = c;
    }
  }
  out.labels = LabelSet::from_classes(cls, out.data.ids);
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T> bool parse_number(std::string_view text, T &value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto *end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, value);
  return !text.empty() && res.ec == std::errc() && res.ptr == end;
}

[[noreturn]] inline void csv_error(const std::string &path, std::size_t line, const std::string &why) {
  throw FormatError(path + ":" + std::to_string(line) + ": " + why);
}

} // namespace detail

/// Header-less rows `id,f1,...,fd`. An empty file yields an empty dataset.
inline FeatureDataset load_features_csv(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot open '" + path + "' for reading");
  }
  std::vector<ItemId> ids;
  std::vector<double> values;
  Index d = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    const auto width = static_cast<Index>(fields.size()) - 1;
    if (width < 1) {
      detail::csv_error(path, lineno, "row has no feature columns");
    }
    if (d < 0) {
      d = width;
    } else if (width != d) {
      detail::csv_error(path, lineno, "row has " + std::to_string(width) + " features, expected " +
                                          std::to_string(d));
    }
    ItemId id = 0;
    if (!detail::parse_number(fields[0], id)) {
      detail::csv_error(path, lineno, "bad id '" + std::string(fields[0]) + "'");
    }
    ids.push_back(id);
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!detail::parse_number(fields[k], v) || !std::isfinite(v)) {
        detail::csv_error(path, lineno, "bad value '" + std::string(fields[k]) + "' in column " +
                                            std::to_string(k + 1));
      }
      values.push_back(v);
    }
  }
  FeatureDataset ds;
  const auto n = static_cast<Index>(ids.size());
  ds.ids = std::move(ids);
  ds.features.resize(n, n == 0 ? 0 : d);
  std::copy(values.begin(), values.end(), ds.features.data());
  return ds;
}

inline void save_features_csv(const FeatureDataset &ds, const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw UsageError("cannot open '" + path + "' for writing");
  }
  out << std::setprecision(17);
  for (Index i = 0; i < ds.n(); ++i) {
    out << ds.ids[static_cast<std::size_t>(i)];
    for (Index k = 0; k < ds.d(); ++k) {
      out << ',' << ds.features(i, k);
    }
    out << '\n';
  }
  if (!out) {
    throw UsageError("failed writing '" + path + "'");
  }
}

inline constexpr std::uint32_t kFeaturesFormatVersion = 1;

// Packed features: "GPHF", u32 version, u32 n, u32 d, n u64 ids, then
// n x d f64 row-major, little-endian.

inline std::vector<char> serialize_features(const FeatureDataset &ds) {
  io::ByteWriter w;
  w.magic("GPHF");
  w.put<std::uint32_t>(kFeaturesFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.n()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.d()));
  for (const ItemId id : ds.ids) {
    w.put<std::uint64_t>(id);
  }
  for (Index i = 0; i < ds.n(); ++i) {
    for (Index k = 0; k < ds.d(); ++k) {
      w.put(ds.features(i, k));
    }
  }
  return w.bytes();
}

inline void save_features_packed(const FeatureDataset &ds, const std::string &path) {
  io::write_file(path, serialize_features(ds));
}

inline FeatureDataset parse_features_packed(io::ByteReader &in) {
  in.expect_magic("GPHF");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kFeaturesFormatVersion) {
    in.fail("version", "unsupported features format version " + std::to_string(version));
  }
  const auto n = in.get<std::uint32_t>("n");
  const auto d = in.get<std::uint32_t>("d");
  FeatureDataset ds;
  in.require(n, 8, "ids");
  ds.ids.resize(n);
  for (auto &id : ds.ids) {
    id = in.get<std::uint64_t>("ids");
  }
  in.require(std::uint64_t{n} * d, 8, "features");
  ds.features.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) {
      const double v = in.get<double>("features");
      if (!std::isfinite(v)) {
        in.fail("features", "non-finite value");
      }
      ds.features(i, k) = v;
    }
  }
  in.expect_end();
  return ds;
}

inline FeatureDataset load_features_packed(const std::string &path) {
  auto in = io::ByteReader::from_file(path);
  return parse_features_packed(in);
}

/// Packed files are recognized by their magic; anything else is CSV.
inline FeatureDataset load_features(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot open '" + path + "' for reading");
  }
  char head[4] = {};
  in.read(head, 4);
  if (in.gcount() == 4 && std::string_view(head, 4) == "GPHF") {
    return load_features_packed(path);
  }
  return load_features_csv(path);
}

/// Rows `id,label[;label]*`.
inline LabelSet load_labels(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot open '" + path + "' for reading");
  }
  LabelSet labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      detail::csv_error(path, lineno, "expected 'id,labels'");
    }
    ItemId id = 0;
    if (!detail::parse_number(std::string_view(line).substr(0, comma), id)) {
      detail::csv_error(path, lineno, "bad id '" + line.substr(0, comma) + "'");
    }
    std::vector<std::string> names;
    const auto field = detail::trim(std::string_view(line).substr(comma + 1));
    if (!field.empty()) {
      for (const auto part : detail::split(field, ';')) {
        const auto name = detail::trim(part);
        if (name.empty()) {
          detail::csv_error(path, lineno, "empty label name");
        }
        names.emplace_back(name);
      }
    }
    if (names.empty()) {
      detail::csv_error(path, lineno, "empty label set for id " + std::to_string(id));
    }
    if (labels.position_of(id)) {
      detail::csv_error(path, lineno, "duplicate id " + std::to_string(id));
    }
    labels.add(id, names);
  }
  return labels;
}

inline void save_labels(const LabelSet &labels, const std::string &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw UsageError("cannot open '" + path + "' for writing");
  }
  for (std::size_t p = 0; p < labels.size(); ++p) {
    out << labels.ids()[p] << ',';
    const auto set = labels.labels_at(p);
    for (std::size_t k = 0; k < set.size(); ++k) {
      out << (k ? ";" : "") << labels.vocabulary()[static_cast<std::size_t>(set[k])];
    }
    out << '\n';
  }
  if (!out) {
    throw UsageError("failed writing '" + path + "'");
  }
}

} // namespace gph

#endif // GPH_DATA_HPP
