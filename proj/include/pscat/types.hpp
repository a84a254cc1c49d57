#pragma once

#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pscat {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kImag{0.0, 1.0};

using Rng = std::mt19937_64;

// Every thrown error carries a stable machine-readable code next to the
// human-readable message; the CLI surfaces the code verbatim.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct ConvergenceError : Error {
  ConvergenceError(const std::string& m, std::vector<double> history)
      : Error("nonconvergence", m), residual_history(std::move(history)) {}
  std::vector<double> residual_history;
};

// Numerical failures with context-specific codes ("symbol_zero",
// "divergence", "coverage", "ill_conditioned", ...).
struct NumericsError : Error {
  NumericsError(std::string code, const std::string& m)
      : Error(std::move(code), m) {}
};

}  // namespace pscat
