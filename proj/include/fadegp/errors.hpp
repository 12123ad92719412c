#pragma once

#include <stdexcept>
#include <string>

namespace fadegp {

// Process exit-code contract: 0 success, 2 validation, 3 convergence, 4 numerical.
enum class ErrorKind : int {
  validation = 2,
  convergence = 3,
  numerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(ErrorKind::validation, msg) {}
};

struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& msg) : Error(ErrorKind::convergence, msg) {}
};

struct NumericalError : Error {
  explicit NumericalError(const std::string& msg) : Error(ErrorKind::numerical, msg) {}
};

}  // namespace fadegp
