#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mvlab {

// Largest supported state / mark dimension. Vectors up to this size live on
// the stack, so the integrator inner loop never allocates.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorKind {
  kConfig,
  kDomain,
  kIntegrability,
  kDivergence,
  kNonConvergence,
  kSize,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
  ConfigError(const std::string& what, std::vector<std::string> violations)
      : Error(ErrorKind::kConfig, what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::kDomain, what) {}
};

class SizeError : public Error {
 public:
  explicit SizeError(const std::string& what) : Error(ErrorKind::kSize, what) {}
};

// A state left the finite region |x| <= divergence threshold.
class DivergenceError : public Error {
 public:
  DivergenceError(double time, std::ptrdiff_t particle, const std::string& what)
      : Error(ErrorKind::kDivergence, what), time_(time), particle_(particle) {}
  double time() const noexcept { return time_; }
  // -1 when the path is not part of a particle system.
  std::ptrdiff_t particle() const noexcept { return particle_; }

 private:
  double time_;
  std::ptrdiff_t particle_;
};

// Compensated (Neumaier) summation.
class KahanSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace mvlab
