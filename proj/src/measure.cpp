#include "mvlab/measure.hpp"

#include <algorithm>
#include <cmath>

namespace mvlab {

EmpiricalMeasure::EmpiricalMeasure(Eigen::MatrixXd points) : points_(std::move(points)) {
  if (points_.cols() < 1) throw DomainError("empirical measure needs at least one point");
  if (points_.rows() < 1 || points_.rows() > kMaxDim) {
    throw DomainError("empirical measure dimension must be in [1, 8]");
  }
  if (!points_.allFinite()) throw DomainError("empirical measure has non-finite points");
  const auto n = static_cast<double>(points_.cols());
  mean_ = Vec::Zero(points_.rows());
  KahanSum sq;
  for (int k = 0; k < points_.rows(); ++k) {
    KahanSum s;
    for (Eigen::Index i = 0; i < points_.cols(); ++i) s.add(points_(k, i));
    mean_(k) = s.value() / n;
  }
  for (Eigen::Index i = 0; i < points_.cols(); ++i) sq.add(points_.col(i).squaredNorm());
  second_moment_ = sq.value() / n;
}

EmpiricalMeasure EmpiricalMeasure::from_points(std::span<const Vec> points) {
  if (points.empty()) throw DomainError("empirical measure needs at least one point");
  const auto dim = points.front().size();
  Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim) throw DomainError("empirical measure: mixed dimensions");
    m.col(static_cast<Eigen::Index>(i)) = points[i];
  }
  return EmpiricalMeasure(std::move(m));
}

EmpiricalMeasure EmpiricalMeasure::from_scalars(std::span<const double> values) {
  Eigen::MatrixXd m(1, static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = values[i];
  return EmpiricalMeasure(std::move(m));
}

EmpiricalMeasure EmpiricalMeasure::dirac(const Vec& x) {
  Eigen::MatrixXd m(x.size(), 1);
  m.col(0) = x;
  return EmpiricalMeasure(std::move(m));
}

MeasureFlow::MeasureFlow(std::vector<double> grid, std::vector<EmpiricalMeasure> clouds)
    : grid_(std::move(grid)), clouds_(std::move(clouds)) {
  if (grid_.empty() || grid_.size() != clouds_.size()) {
    throw DomainError("measure flow needs exactly one cloud per grid time");
  }
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k] > grid_[k - 1])) throw DomainError("measure flow grid must be increasing");
    if (clouds_[k].dim() != clouds_[0].dim()) {
      throw DomainError("measure flow clouds must share one dimension");
    }
  }
}

const EmpiricalMeasure& MeasureFlow::at(double t) const {
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  if (it == grid_.begin()) return clouds_.front();
  return clouds_[static_cast<std::size_t>(std::distance(grid_.begin(), it)) - 1];
}

MeasureFlow MeasureFlow::constant(std::vector<double> grid, const EmpiricalMeasure& cloud) {
  std::vector<EmpiricalMeasure> clouds(grid.size(), cloud);
  return MeasureFlow(std::move(grid), std::move(clouds));
}

Vec Kernel::operator()(const Vec& v) const {
  switch (kind) {
    case Kind::kZero:
      return Vec::Zero(v.size());
    case Kind::kLinear:
      return scale * v;
    case Kind::kTanh:
      return v.unaryExpr([this](double c) { return std::tanh(scale * c); });
    case Kind::kCustom:
      return custom(v);
  }
  return v;
}

double Kernel::lipschitz() const {
  switch (kind) {
    case Kind::kZero:
      return 0.0;
    case Kind::kLinear:
    case Kind::kTanh:
      return std::abs(scale);
    case Kind::kCustom:
      return custom_lipschitz;
  }
  return 0.0;
}

double beta_norm(const EmpiricalMeasure& mu, double beta) {
  if (!(beta >= 1.0)) throw DomainError("beta_norm requires beta >= 1");
  KahanSum s;
  const auto& pts = mu.points();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) s.add(std::pow(pts.col(i).norm(), beta));
  return std::pow(s.value() / static_cast<double>(mu.size()), 1.0 / beta);
}

double interaction_term(const EmpiricalMeasure& mu, const Vec& x, const Kernel& h, double beta) {
  if (!(beta >= 1.0)) throw DomainError("interaction_term requires beta >= 1");
  if (h.kind == Kernel::Kind::kZero) return 0.0;
  KahanSum s;
  const auto& pts = mu.points();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Vec diff = x - pts.col(i);
    s.add(std::pow(h(diff).norm(), beta));
  }
  return std::pow(s.value() / static_cast<double>(mu.size()), 1.0 / beta);
}

double lyapunov_diagnostic(const Vec& x, double beta) {
  if (!(beta > 0.0 && beta <= 2.0)) throw DomainError("lyapunov_diagnostic requires beta in (0, 2]");
  return std::pow(1.0 + x.squaredNorm(), beta / 2.0);
}

}  // namespace mvlab
