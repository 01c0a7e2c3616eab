#pragma once

#include "mvlab/types.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace mvlab {

// Uniform-weight point cloud in R^d. Points are stored column-wise; the mean
// and mean squared norm are cached at construction.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(Eigen::MatrixXd points);
  static EmpiricalMeasure from_points(std::span<const Vec> points);
  static EmpiricalMeasure from_scalars(std::span<const double> values);
  static EmpiricalMeasure dirac(const Vec& x);

  std::size_t size() const { return static_cast<std::size_t>(points_.cols()); }
  int dim() const { return static_cast<int>(points_.rows()); }
  Vec point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Vec& mean() const { return mean_; }
  // (1/n) sum |x_i|^2
  double second_moment() const { return second_moment_; }

 private:
  Eigen::MatrixXd points_;
  Vec mean_;
  double second_moment_ = 0.0;
};

// t -> mu_t on a time grid; lookups between grid times are left-continuous
// piecewise constant (the cloud at the nearest grid time <= t).
class MeasureFlow {
 public:
  MeasureFlow() = default;
  MeasureFlow(std::vector<double> grid, std::vector<EmpiricalMeasure> clouds);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<EmpiricalMeasure>& clouds() const { return clouds_; }
  std::size_t size() const { return grid_.size(); }
  const EmpiricalMeasure& at_index(std::size_t k) const { return clouds_[k]; }
  const EmpiricalMeasure& at(double t) const;

  // Constant-in-time flow.
  static MeasureFlow constant(std::vector<double> grid, const EmpiricalMeasure& cloud);

 private:
  std::vector<double> grid_;
  std::vector<EmpiricalMeasure> clouds_;
};

// Interaction kernel h: R^d -> R^d with a declared Lipschitz constant.
struct Kernel {
  enum class Kind { kZero, kLinear, kTanh, kCustom };
  Kind kind = Kind::kLinear;
  double scale = 1.0;
  std::function<Vec(const Vec&)> custom;
  double custom_lipschitz = 0.0;

  static Kernel zero() { return {Kind::kZero, 0.0, {}, 0.0}; }
  static Kernel linear(double s) { return {Kind::kLinear, s, {}, 0.0}; }
  static Kernel tanh(double s) { return {Kind::kTanh, s, {}, 0.0}; }
  static Kernel make_custom(std::function<Vec(const Vec&)> fn, double lipschitz) {
    return {Kind::kCustom, 1.0, std::move(fn), lipschitz};
  }

  Vec operator()(const Vec& v) const;
  double lipschitz() const;
};

// mu(|.|^beta)^(1/beta)
double beta_norm(const EmpiricalMeasure& mu, double beta);

// mu(|h(x - .)|^beta)^(1/beta), by direct summation.
double interaction_term(const EmpiricalMeasure& mu, const Vec& x, const Kernel& h, double beta);

// V_beta(x) = (1 + |x|^2)^(beta/2)
double lyapunov_diagnostic(const Vec& x, double beta);

}  // namespace mvlab
