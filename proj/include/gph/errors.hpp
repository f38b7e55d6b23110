#ifndef GPH_ERRORS_HPP
#define GPH_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gph {

/// Error categories. The CLI maps each category onto a process exit code.
enum class ErrorKind { usage = 1, format = 2, numerical = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Bad arguments or configuration supplied by the caller.
class UsageError : public Error {
public:
  explicit UsageError(const std::string &what) : Error(ErrorKind::usage, what) {}
};

/// Mismatched vector/matrix dimensions.
class DimensionError : public UsageError {
public:
  using UsageError::UsageError;
};

/// Malformed or unsupported file contents.
class FormatError : public Error {
public:
  explicit FormatError(const std::string &what)
      : Error(ErrorKind::format, what) {}
};

/// Factorization or posterior update that could not be completed.
class NumericalError : public Error {
public:
  explicit NumericalError(const std::string &what)
      : Error(ErrorKind::numerical, what) {}
};

} // namespace gph

#endif // GPH_ERRORS_HPP
