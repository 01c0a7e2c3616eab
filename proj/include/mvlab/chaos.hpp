#pragma once

#include "mvlab/coefficients.hpp"
#include "mvlab/solver.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvlab {

// Exponent e with phi_{p,beta,d}(n) = n^e:
//   -(1 - p/beta)  for d = 1, 2; d = 3 with p >= 3/2; d = 3, p < 3/2 with
//                  beta < 3p/(3-p); d >= 4 with beta < dp/(d-p);
//   -p/d           otherwise.
// Requires 1 <= p < beta <= 2 and d >= 1.
double phi_rate(double p, double beta, int d);

struct RatePoint {
  double n = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
};

struct SlopeFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  bool weighted = false;
};

// Least squares on (log n, log estimate). When every point carries a positive
// SE, weights are est^2/SE^2 (delta method) and the slope SE is the
// known-variance one; otherwise ordinary least squares with residual SE.
SlopeFit fit_loglog_slope(std::span<const RatePoint> points);

inline constexpr double kSlopeSlack = 0.15;

struct RateReport {
  std::string experiment;
  std::vector<RatePoint> points;
  // Per-n means of the two components of the weak estimate (empty otherwise).
  std::vector<double> interacting;
  std::vector<double> iid;
  SlopeFit fit;
  double theoretical = 0.0;
  double slack = kSlopeSlack;
  bool reference_converged = true;
  std::size_t reference_paths = 0;
  bool pass = false;
};

enum class EvalMode { kTerminal, kSupOverGrid };

struct PoCConfig {
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  double p = 1.0;
  double q1 = 0.5;
  double q2 = 0.9;
  double horizon = 1.0;
  double step = 0.01;
  EvalMode eval = EvalMode::kTerminal;
  // Reference flow uses m = reference_factor * max(n_grid) paths.
  std::size_t reference_factor = 4;
  std::uint64_t seed = 1;
  std::uint32_t experiment = 1;
  SolverConfig solver;  // gamma, tolerance, iterations for the reference run
  int jobs = 1;

  // Throws ConfigError listing every violation (p vs beta, q ordering, grid).
  void validate(double beta, bool strong) const;
};

// Weak propagation of chaos: E W_p^p(mu^n_t, mu_t) bounded through
// 2^{p-1}(W_p^p(interacting, coupled copies) + W_p^p(copies, independent copies)).
RateReport run_weak_poc(const CoefficientSet& coeffs, const LevyModel& levy,
                        const InitialLaw& initial, const PoCConfig& config);

// Strong propagation of chaos: E sup_t |X^{i,n}_t - X^i_t|^{p q1}.
RateReport run_strong_poc(const CoefficientSet& coeffs, const LevyModel& levy,
                          const InitialLaw& initial, const PoCConfig& config);

// Independent-sample rate: E W_p^p between two independent n-samples of the
// limit law at the terminal time.
RateReport run_iid_rate(const CoefficientSet& coeffs, const LevyModel& levy,
                        const InitialLaw& initial, const PoCConfig& config);

struct MomentRow {
  double scaling = 1.0;
  double initial_moment = 0.0;   // E|X_0|^beta
  double terminal_moment = 0.0;  // E|X_T|^beta
  double sup_moment = 0.0;       // E sup_t |X_t|^beta over the base grid
  double max_time_moment = 0.0;  // sup_t E|X_t|^beta
  double ratio = 0.0;            // sup_t E|X_t|^beta / (1 + E|X_0|^beta)
  double sup_ratio = 0.0;        // E sup_t |X_t|^beta / (1 + E|X_0|^beta)
};

struct MomentReport {
  std::vector<MomentRow> rows;
  double spread = 0.0;  // max ratio / min ratio
  double threshold = 3.0;
  bool sup_variant = false;  // sup-moment column covered by the stronger coercivity flag
  bool pass = false;
};

MomentReport run_moment_experiment(const CoefficientSet& coeffs, const LevyModel& levy,
                                   const InitialLaw& initial, std::span<const double> scalings,
                                   const TimeGrid& grid, const SolverConfig& config,
                                   const NoiseStream& base, bool sup_variant);

// Common layer for the conditional variants: rep r is driven by common path
// r mod paths, and the reference is the conditional fixed point per path.
struct CommonLayerSetup {
  const LevyModel* levy = nullptr;
  std::size_t paths = 32;
};

RateReport weak_poc_impl(const CoefficientSet& coeffs, const LevyModel& levy,
                         const InitialLaw& initial, const PoCConfig& config,
                         const CommonLayerSetup* common);

// Helpers shared with the common-noise experiments.
RatePoint summarize(double n, std::span<const double> replicate_values);
void finish_report(RateReport& report, double theoretical);

}  // namespace mvlab
