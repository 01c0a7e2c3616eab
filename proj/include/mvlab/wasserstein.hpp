#pragma once

#include "mvlab/measure.hpp"
#include "mvlab/rng.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace mvlab {

// Optimal coupling between two equal-size clouds: point i of mu is sent to
// point assignment[i] of nu. cost = (1/n) sum |x_i - y_assignment[i]|^p.
struct TransportPlan {
  std::vector<std::size_t> assignment;
  double cost = 0.0;
};

struct ExactDistance {
  double distance = 0.0;
  TransportPlan plan;
};

struct SlicedDistance {
  double distance = 0.0;
  double std_error = 0.0;
  int projections = 0;
};

inline constexpr std::size_t kDefaultAssignmentCap = 4096;

// W_p^p between equal-size one-dimensional clouds (sorted coupling).
double w_pp_1d(std::span<const double> x, std::span<const double> y, double p);
double w_p_1d(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p);

// Exact minimum-cost assignment with cost |x - y|^p (shortest augmenting
// path with potentials, ties to the lowest index).
ExactDistance w_p_exact(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                        std::size_t cap = kDefaultAssignmentCap);

// Mean of one-dimensional W_p over K random directions. A surrogate, not W_p.
SlicedDistance w_p_sliced(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                          int projections, const NoiseStream& stream);

enum class WassersteinMethod { kAuto, kExact, kSliced };

struct WassersteinOptions {
  WassersteinMethod method = WassersteinMethod::kAuto;
  std::size_t cap = kDefaultAssignmentCap;
  int projections = 64;
  NoiseStream stream{0x736c6963ull, {kMaxExperimentId, 2, 0, Layer::kAuxiliary}};
};

// W_p^p. Auto: sorted coupling in d = 1, exact assignment up to the cap,
// sliced surrogate above it.
double wasserstein_pow(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                       const WassersteinOptions& options = {});

// sup_k exp(-gamma t_k) W_beta(mu_{t_k}, nu_{t_k}) over a shared grid.
double flow_distance(const MeasureFlow& a, const MeasureFlow& b, double beta, double gamma,
                     const WassersteinOptions& options = {});

// sup_k exp(-gamma t_k) (mean_c W_beta^beta(a_c(t_k), b_c(t_k)))^(1/beta): the
// conditional metric over a family of per-common-path flows.
double conditional_flow_distance(std::span<const MeasureFlow> a, std::span<const MeasureFlow> b,
                                 double beta, double gamma, const WassersteinOptions& options = {});

}  // namespace mvlab
