#ifndef GPH_HASH_HPP
#define GPH_HASH_HPP

// Deployable hash functions h_j(x) = sgn(k_u(x)^T w_j), packed binary
// codes, and an exhaustive Hamming-distance index.

#include "gph/binary_io.hpp"
#include "gph/errors.hpp"
#include "gph/kernel.hpp"
#include "gph/types.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

namespace gph {

struct HashModel {
  static constexpr std::uint32_t kFormatVersion = 1;

  Matrix inducing_inputs;  // r x d
  Matrix weights;          // r x m
  KernelConfig kernel;
  std::uint64_t seed = 0;

  [[nodiscard]] Index d() const { return inducing_inputs.cols(); }
  [[nodiscard]] Index r() const { return inducing_inputs.rows(); }
  [[nodiscard]] Index m() const { return weights.cols(); }

  void validate() const {
    if (weights.rows() != inducing_inputs.rows()) {
      std::ostringstream os;
      os << "hash model: weight rows " << weights.rows() << " != inducing rows "
         << inducing_inputs.rows();
      throw UsageError(os.str());
    }
    kernel.validate();
  }
};

/// m signs packed little-endian into 64-bit words; +1 is a set bit and
/// padding bits are zero.
class BinaryCode {
public:
  BinaryCode() = default;

  explicit BinaryCode(Index m) : m_(m), words_(word_count(m), 0) {}

  static BinaryCode from_signs(std::span<const std::int8_t> signs) {
    BinaryCode c(static_cast<Index>(signs.size()));
    for (std::size_t j = 0; j < signs.size(); ++j) {
      if (signs[j] != 1 && signs[j] != -1) {
        throw UsageError("BinaryCode: signs must be +1 or -1");
      }
      if (signs[j] > 0) {
        c.words_[j / 64] |= std::uint64_t{1} << (j % 64);
      }
    }
    return c;
  }

  static BinaryCode from_words(Index m, std::vector<std::uint64_t> words) {
    if (words.size() != word_count(m)) {
      throw UsageError("BinaryCode: word count does not match code length");
    }
    BinaryCode c;
    c.m_ = m;
    c.words_ = std::move(words);
    if (m % 64 != 0 && (c.words_.back() >> (m % 64)) != 0) {
      throw FormatError("BinaryCode: nonzero padding bits");
    }
    return c;
  }

  static std::size_t word_count(Index m) { return static_cast<std::size_t>((m + 63) / 64); }

  [[nodiscard]] Index size() const { return m_; }
  [[nodiscard]] std::span<const std::uint64_t> words() const { return words_; }

  [[nodiscard]] std::int8_t sign(Index j) const {
    return ((words_[static_cast<std::size_t>(j / 64)] >> (j % 64)) & 1u) ? 1 : -1;
  }

  void set_sign(Index j, bool plus) {
    const std::uint64_t mask = std::uint64_t{1} << (j % 64);
    auto &w = words_[static_cast<std::size_t>(j / 64)];
    w = plus ? (w | mask) : (w & ~mask);
  }

  [[nodiscard]] std::vector<std::int8_t> to_signs() const {
    std::vector<std::int8_t> out(static_cast<std::size_t>(m_));
    for (Index j = 0; j < m_; ++j) {
      out[static_cast<std::size_t>(j)] = sign(j);
    }
    return out;
  }

  bool operator==(const BinaryCode &) const = default;

private:
  Index m_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Number of differing bits.
inline int hamming(const BinaryCode &a, const BinaryCode &b) {
  if (a.size() != b.size()) {
    std::ostringstream os;
    os << "hamming: code lengths differ (" << a.size() << " vs " << b.size() << ")";
    throw DimensionError(os.str());
  }
  int d = 0;
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t k = 0; k < wa.size(); ++k) {
    d += std::popcount(wa[k] ^ wb[k]);
  }
  return d;
}

/// Codes for every row of `x` through one p x r Gram matrix.
inline std::vector<BinaryCode> encode_batch(const HashModel &model, const Matrix &x) {
  if (x.rows() > 0 && x.cols() != model.d()) {
    std::ostringstream os;
    os << "encode: feature dimension " << x.cols() << " does not match model dimension "
       << model.d();
    throw DimensionError(os.str());
  }
  std::vector<BinaryCode> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  if (x.rows() == 0) {
    return out;
  }
  const Matrix k = gram_matrix(x, model.inducing_inputs, model.kernel);
  const Index r = model.r();
  const Index m = model.m();
  for (Index i = 0; i < x.rows(); ++i) {
    BinaryCode code(m);
    for (Index j = 0; j < m; ++j) {
      double s = 0.0;
      for (Index l = 0; l < r; ++l) {
        s += k(i, l) * model.weights(l, j);
      }
      code.set_sign(j, s >= 0.0);
    }
    out.push_back(std::move(code));
  }
  return out;
}

inline BinaryCode encode(const HashModel &model, std::span<const double> x) {
  Matrix row(1, static_cast<Index>(x.size()));
  std::copy(x.begin(), x.end(), row.data());
  if (row.cols() != model.d()) {
    std::ostringstream os;
    os << "encode: feature dimension " << row.cols() << " does not match model dimension "
       << model.d();
    throw DimensionError(os.str());
  }
  return std::move(encode_batch(model, row).front());
}

struct SearchHit {
  ItemId id = 0;
  int distance = 0;

  bool operator==(const SearchHit &) const = default;
};

class HammingIndex {
public:
  HammingIndex() = default;
  explicit HammingIndex(Index m) : m_(m) {}

  void add(ItemId id, BinaryCode code) {
    if (code.size() != m_) {
      std::ostringstream os;
      os << "HammingIndex: code length " << code.size() << " != index length " << m_;
      throw DimensionError(os.str());
    }
    if (!seen_.insert(id).second) {
      throw UsageError("HammingIndex: duplicate id " + std::to_string(id));
    }
    ids_.push_back(id);
    codes_.push_back(std::move(code));
  }

  [[nodiscard]] Index code_length() const { return m_; }
  [[nodiscard]] std::size_t size() const { return ids_.size(); }
  [[nodiscard]] bool empty() const { return ids_.empty(); }
  [[nodiscard]] std::span<const ItemId> ids() const { return ids_; }
  [[nodiscard]] const BinaryCode &code_at(std::size_t pos) const { return codes_[pos]; }

  /// The k nearest codes, ties broken by ascending id.
  [[nodiscard]] std::vector<SearchHit> search(const BinaryCode &q, std::size_t k) const {
    if (k == 0) {
      throw UsageError("search: k must be at least 1");
    }
    std::vector<SearchHit> hits;
    hits.reserve(ids_.size());
    for (std::size_t p = 0; p < ids_.size(); ++p) {
      hits.push_back({ids_[p], hamming(q, codes_[p])});
    }
    const auto less = [](const SearchHit &a, const SearchHit &b) {
      return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
    };
    const std::size_t keep = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                      less);
    hits.resize(keep);
    return hits;
  }

  /// Ids within Hamming distance `radius`, ascending.
  [[nodiscard]] std::vector<ItemId> within_radius(const BinaryCode &q, int radius) const {
    if (radius < 0) {
      throw UsageError("within_radius: radius must be nonnegative");
    }
    std::vector<ItemId> out;
    for (std::size_t p = 0; p < ids_.size(); ++p) {
      if (hamming(q, codes_[p]) <= radius) {
        out.push_back(ids_[p]);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

private:
  Index m_ = 0;
  std::vector<ItemId> ids_;
  std::vector<BinaryCode> codes_;
  std::unordered_set<ItemId> seen_;
};

// Model file: "GPHM", u32 version, u32 d, u32 r, u32 m, inducing inputs
// (r x d, f64, row-major), weights (r x m, f64, row-major), signal_std,
// length_scale, jitter (f64), u64 seed. All little-endian.

inline std::vector<char> serialize_model(const HashModel &model) {
  model.validate();
  io::ByteWriter w;
  w.magic("GPHM");
  w.put<std::uint32_t>(HashModel::kFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.d()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.r()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(model.m()));
  for (Index i = 0; i < model.r(); ++i) {
    for (Index k = 0; k < model.d(); ++k) {
      w.put(model.inducing_inputs(i, k));
    }
  }
  for (Index i = 0; i < model.r(); ++i) {
    for (Index j = 0; j < model.m(); ++j) {
      w.put(model.weights(i, j));
    }
  }
  w.put(model.kernel.signal_std);
  w.put(model.kernel.length_scale);
  w.put(model.kernel.jitter);
  w.put<std::uint64_t>(model.seed);
  return w.bytes();
}

inline void save_model(const HashModel &model, const std::string &path) {
  io::write_file(path, serialize_model(model));
}

inline HashModel parse_model(io::ByteReader &in) {
  in.expect_magic("GPHM");
  const auto version = in.get<std::uint32_t>("version");
  if (version != HashModel::kFormatVersion) {
    in.fail("version", "unsupported model format version " + std::to_string(version) +
                           " (expected " + std::to_string(HashModel::kFormatVersion) + ")");
  }
  const auto d = in.get<std::uint32_t>("d");
  const auto r = in.get<std::uint32_t>("r");
  const auto m = in.get<std::uint32_t>("m");
  if (d == 0) in.fail("d", "must be positive");
  if (r == 0) in.fail("r", "must be positive");
  if (m == 0) in.fail("m", "must be positive");
  HashModel model;
  in.require(std::uint64_t{r} * d, 8, "inducing_inputs");
  model.inducing_inputs.resize(r, d);
  for (Index i = 0; i < r; ++i) {
    for (Index k = 0; k < d; ++k) {
      model.inducing_inputs(i, k) = in.get<double>("inducing_inputs");
    }
  }
  in.require(std::uint64_t{r} * m, 8, "weights");
  model.weights.resize(r, m);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < m; ++j) {
      model.weights(i, j) = in.get<double>("weights");
    }
  }
  model.kernel.signal_std = in.get<double>("signal_std");
  model.kernel.length_scale = in.get<double>("length_scale");
  model.kernel.jitter = in.get<double>("jitter");
  model.seed = in.get<std::uint64_t>("seed");
  in.expect_end();
  try {
    model.kernel.validate();
  } catch (const UsageError &e) {
    in.fail("kernel", e.what());
  }
  return model;
}

inline HashModel load_model(const std::string &path) {
  auto in = io::ByteReader::from_file(path);
  return parse_model(in);
}

// Codes file: "GPHC", u32 version, u32 m, u64 count, then per item u64 id
// followed by ceil(m / 64) u64 words.

inline constexpr std::uint32_t kCodesFormatVersion = 1;

inline void save_codes(const HammingIndex &index, const std::string &path) {
  io::ByteWriter w;
  w.magic("GPHC");
  w.put<std::uint32_t>(kCodesFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(index.code_length()));
  w.put<std::uint64_t>(index.size());
  for (std::size_t p = 0; p < index.size(); ++p) {
    w.put<std::uint64_t>(index.ids()[p]);
    for (const auto word : index.code_at(p).words()) {
      w.put<std::uint64_t>(word);
    }
  }
  w.write_file(path);
}

inline HammingIndex load_codes(const std::string &path) {
  auto in = io::ByteReader::from_file(path);
  in.expect_magic("GPHC");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCodesFormatVersion) {
    in.fail("version", "unsupported codes format version " + std::to_string(version));
  }
  const auto m = in.get<std::uint32_t>("m");
  if (m == 0) in.fail("m", "must be positive");
  const auto count = in.get<std::uint64_t>("count");
  const std::size_t words = BinaryCode::word_count(m);
  in.require(count, 8 * (1 + words), "items");
  HammingIndex index(m);
  for (std::uint64_t c = 0; c < count; ++c) {
    const auto id = in.get<std::uint64_t>("id");
    std::vector<std::uint64_t> ws(words);
    for (auto &word : ws) {
      word = in.get<std::uint64_t>("code");
    }
    try {
      index.add(id, BinaryCode::from_words(m, std::move(ws)));
    } catch (const Error &e) {
      in.fail("items", e.what());
    }
  }
  in.expect_end();
  return index;
}

} // namespace gph

#endif // GPH_HASH_HPP
