#include "mvlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mvlab {

namespace {

void require_same_shape(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  if (mu.size() != nu.size()) {
    throw SizeError("Wasserstein: clouds must have equal size (" + std::to_string(mu.size()) +
                    " vs " + std::to_string(nu.size()) + ")");
  }
  if (mu.dim() != nu.dim()) throw SizeError("Wasserstein: clouds must share one dimension");
}

double cost_pow(double dist, double p) {
  if (p == 1.0) return dist;
  if (p == 2.0) return dist * dist;
  return std::pow(dist, p);
}

}  // namespace

double w_pp_1d(std::span<const double> x, std::span<const double> y, double p) {
  if (x.size() != y.size()) throw SizeError("w_p_1d: clouds must have equal size");
  if (x.empty()) throw SizeError("w_p_1d: empty cloud");
  if (!(p >= 1.0)) throw DomainError("w_p_1d: p must be >= 1");
  std::vector<double> xs(x.begin(), x.end());
  std::vector<double> ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  KahanSum acc;
  for (std::size_t i = 0; i < xs.size(); ++i) acc.add(cost_pow(std::abs(xs[i] - ys[i]), p));
  return acc.value() / static_cast<double>(xs.size());
}

double w_p_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p) {
  require_same_shape(mu, nu);
  if (mu.dim() != 1) throw SizeError("w_p_1d: clouds must be one-dimensional");
  const auto& a = mu.points();
  const auto& b = nu.points();
  const double pp = w_pp_1d({a.data(), static_cast<std::size_t>(a.size())},
                            {b.data(), static_cast<std::size_t>(b.size())}, p);
  return std::pow(pp, 1.0 / p);
}

ExactDistance w_p_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                        std::size_t cap) {
  require_same_shape(mu, nu);
  if (!(p >= 1.0)) throw DomainError("w_p_exact: p must be >= 1");
  const std::size_t n = mu.size();
  if (n > cap) {
    throw SizeError("w_p_exact: cloud size " + std::to_string(n) + " exceeds assignment cap " +
                    std::to_string(cap) + "; use the sliced variant");
  }
  const auto& xa = mu.points();
  const auto& ya = nu.points();
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (xa.col(static_cast<Eigen::Index>(i)) - ya.col(static_cast<Eigen::Index>(j))).norm();
      cost[i * n + j] = cost_pow(d, p);
    }
  }

  // Hungarian method, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    match[0] = row;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  ExactDistance out;
  out.plan.assignment.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) out.plan.assignment[match[j] - 1] = j - 1;
  KahanSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(cost[i * n + out.plan.assignment[i]]);
  out.plan.cost = acc.value() / static_cast<double>(n);
  out.distance = std::pow(out.plan.cost, 1.0 / p);
  return out;
}

SlicedDistance w_p_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                          int projections, const NoiseStream& stream) {
  require_same_shape(mu, nu);
  if (projections < 1) throw DomainError("w_p_sliced: need at least one projection");
  const std::size_t n = mu.size();
  const int d = mu.dim();
  RandomStream rng = stream.open();
  std::vector<double> px(n), py(n), vals(static_cast<std::size_t>(projections));
  for (int k = 0; k < projections; ++k) {
    Vec dir(d);
    if (d == 1) {
      dir(0) = 1.0;
    } else {
      do {
        for (int c = 0; c < d; ++c) dir(c) = rng.normal();
      } while (dir.norm() == 0.0);
      dir /= dir.norm();
    }
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = mu.points().col(static_cast<Eigen::Index>(i)).dot(dir);
      py[i] = nu.points().col(static_cast<Eigen::Index>(i)).dot(dir);
    }
    vals[static_cast<std::size_t>(k)] = std::pow(w_pp_1d(px, py, p), 1.0 / p);
  }
  KahanSum s;
  for (double v : vals) s.add(v);
  const double mean = s.value() / projections;
  double var = 0.0;
  if (projections > 1) {
    KahanSum sq;
    for (double v : vals) sq.add((v - mean) * (v - mean));
    var = sq.value() / (projections - 1);
  }
  return {mean, std::sqrt(var / projections), projections};
}

double wasserstein_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                       const WassersteinOptions& options) {
  require_same_shape(mu, nu);
  const bool one_dim = mu.dim() == 1;
  switch (options.method) {
    case WassersteinMethod::kAuto:
      if (one_dim) {
        const auto& a = mu.points();
        const auto& b = nu.points();
        return w_pp_1d({a.data(), static_cast<std::size_t>(a.size())},
                       {b.data(), static_cast<std::size_t>(b.size())}, p);
      }
      if (mu.size() <= options.cap) return w_p_exact(mu, nu, p, options.cap).plan.cost;
      return std::pow(w_p_sliced(mu, nu, p, options.projections, options.stream).distance, p);
    case WassersteinMethod::kExact:
      return w_p_exact(mu, nu, p, options.cap).plan.cost;
    case WassersteinMethod::kSliced:
      return std::pow(w_p_sliced(mu, nu, p, options.projections, options.stream).distance, p);
  }
  return 0.0;
}

double flow_distance(const MeasureFlow& a, const MeasureFlow& b, double beta, double gamma,
                     const WassersteinOptions& options) {
  if (a.grid() != b.grid()) throw SizeError("flow_distance: flows must share one grid");
  if (!(gamma >= 0.0)) throw DomainError("flow_distance: gamma must be >= 0");
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double w = std::pow(wasserstein_pow(a.at_index(k), b.at_index(k), beta, options), 1.0 / beta);
    sup = std::max(sup, std::exp(-gamma * a.grid()[k]) * w);
  }
  return sup;
}

double conditional_flow_distance(std::span<const MeasureFlow> a, std::span<const MeasureFlow> b,
                                 double beta, double gamma, const WassersteinOptions& options) {
  if (a.size() != b.size() || a.empty()) {
    throw SizeError("conditional_flow_distance: need matching non-empty flow families");
  }
  const auto& grid = a.front().grid();
  for (std::size_t c = 0; c < a.size(); ++c) {
    if (a[c].grid() != grid || b[c].grid() != grid) {
      throw SizeError("conditional_flow_distance: flows must share one grid");
    }
  }
  double sup = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    KahanSum acc;
    for (std::size_t c = 0; c < a.size(); ++c) {
      acc.add(wasserstein_pow(a[c].at_index(k), b[c].at_index(k), beta, options));
    }
    const double w = std::pow(acc.value() / static_cast<double>(a.size()), 1.0 / beta);
    sup = std::max(sup, std::exp(-gamma * grid[k]) * w);
  }
  return sup;
}

}  // namespace mvlab
