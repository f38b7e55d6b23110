#ifndef GPH_BINARY_IO_HPP
#define GPH_BINARY_IO_HPP

// Little-endian field writer/reader used by the model, codes and packed
// feature files. Reads report the name of the field that ran short.

#include "gph/errors.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace gph::io {

inline void write_file(const std::string &path, const std::vector<char> &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw UsageError("cannot open '" + path + "' for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw UsageError("failed writing '" + path + "'");
  }
}

class ByteWriter {
public:
  void magic(std::string_view tag) { bytes_.insert(bytes_.end(), tag.begin(), tag.end()); }

  template <typename T> void put(T value) {
    static_assert(std::is_integral_v<T> || std::is_floating_point_v<T>);
    if constexpr (std::is_floating_point_v<T>) {
      static_assert(sizeof(T) == 8);
      put(std::bit_cast<std::uint64_t>(value));
    } else {
      using U = std::make_unsigned_t<T>;
      auto u = static_cast<U>(value);
      for (std::size_t k = 0; k < sizeof(T); ++k) {
        bytes_.push_back(static_cast<char>(u & 0xFFu));
        u = static_cast<U>(u >> 8);
      }
    }
  }

  [[nodiscard]] const std::vector<char> &bytes() const { return bytes_; }

  void write_file(const std::string &path) const { io::write_file(path, bytes_); }

private:
  std::vector<char> bytes_;
};

class ByteReader {
public:
  explicit ByteReader(std::vector<char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static ByteReader from_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw UsageError("cannot open '" + path + "' for reading");
    }
    std::vector<char> data((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path);
  }

  void expect_magic(std::string_view tag) {
    need(tag.size(), "magic");
    if (std::string_view(bytes_.data() + pos_, tag.size()) != tag) {
      fail("magic", "expected \"" + std::string(tag) + "\"");
    }
    pos_ += tag.size();
  }

  template <typename T> T get(std::string_view field) {
    if constexpr (std::is_floating_point_v<T>) {
      static_assert(sizeof(T) == 8);
      return std::bit_cast<double>(get<std::uint64_t>(field));
    } else {
      need(sizeof(T), field);
      using U = std::make_unsigned_t<T>;
      U u = 0;
      for (std::size_t k = 0; k < sizeof(T); ++k) {
        u = static_cast<U>(u | static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + k]))
                                   << (8 * k));
      }
      pos_ += sizeof(T);
      return static_cast<T>(u);
    }
  }

  /// Fails unless at least `count * width` bytes remain.
  void require(std::uint64_t count, std::size_t width, std::string_view field) const {
    const std::uint64_t left = bytes_.size() - pos_;
    if (count > left / width) {
      fail(field, "truncated (need " + std::to_string(count) + " x " + std::to_string(width) +
                      " bytes, " + std::to_string(left) + " left)");
    }
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      fail("trailer", std::to_string(bytes_.size() - pos_) + " unexpected trailing bytes");
    }
  }

  [[noreturn]] void fail(std::string_view field, const std::string &why) const {
    throw FormatError(source_ + ": field '" + std::string(field) + "' at offset " +
                      std::to_string(pos_) + ": " + why);
  }

private:
  void need(std::size_t width, std::string_view field) const {
    if (bytes_.size() - pos_ < width) {
      fail(field, "truncated");
    }
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

} // namespace gph::io

#endif // GPH_BINARY_IO_HPP
