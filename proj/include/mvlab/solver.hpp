#pragma once

#include "mvlab/coefficients.hpp"
#include "mvlab/levy.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/wasserstein.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mvlab {

// Uniform base grid 0 = t_0 < ... < t_M = T (last step shortened if h does
// not divide T). Big-jump times are inserted per path by the integrator.
struct TimeGrid {
  double horizon = 1.0;
  double step = 0.01;
  std::vector<double> base;

  static TimeGrid uniform(double horizon, double step);
  std::size_t steps() const { return base.size() - 1; }
};

struct AppliedJump {
  double time = 0.0;
  Vec mark;
  Vec increment;  // g(x_pre, mu, mark)
  bool common = false;
};

// One cadlag trajectory. At a jump time the stored state is the post-jump
// value; the pre-jump value is state - increment from the jump log.
struct PathSolution {
  int dim = 1;
  std::vector<double> times;
  std::vector<double> states;  // times.size() * dim, row-major by time
  std::vector<AppliedJump> jumps;

  std::size_t size() const { return times.size(); }
  Vec state(std::size_t k) const;
  Vec terminal() const { return state(size() - 1); }
  void push(double t, const Vec& x);
};

struct SolverConfig {
  double step = 0.01;
  std::size_t paths = 1000;  // Monte Carlo path count m for the fixed point
  double gamma = 10.0;
  double tolerance = 1e-3;
  int max_iterations = 20;
  bool common_random_numbers = true;
  double divergence_threshold = 1e12;
  std::size_t compensator_marks = 4096;
  WassersteinOptions wasserstein;
  int jobs = 1;
};

// Law of X_0.
struct InitialLaw {
  int dim = 1;
  std::string name;
  std::function<Vec(RandomStream&)> draw;

  static InitialLaw point(const Vec& x0);
  static InitialLaw uniform_box(int dim, double lo, double hi);
  static InitialLaw gaussian(int dim, double mean, double sd);
  InitialLaw scaled(double factor) const;
};

// Noise driving one path: idiosyncratic layers (kSmall, kBig) of `own`, plus
// the common layers (kCommonSmall, kCommonBig) of `common` when present.
struct PathDriver {
  NoiseStream own;
  std::optional<NoiseStream> common;
};

// Particle id reserved for the common stream of a realization.
inline constexpr std::uint32_t kCommonParticle = 0xFFFFFFFFu;

// Common stream of outer path c: replica c, reserved particle id.
inline NoiseStream common_path_stream(std::uint64_t seed, std::uint32_t experiment, std::size_t c) {
  return NoiseStream{seed, {experiment, static_cast<std::uint32_t>(c), kCommonParticle,
                            Layer::kCommonBig}};
}

// Everything a single Euler/interlacing step needs, built once per run.
class Dynamics {
 public:
  Dynamics(const CoefficientSet& coeffs, const LevyModel& levy, const LevyModel* common_levy,
           const SolverConfig& config);

  const CoefficientSet& coeffs() const { return *coeffs_; }
  const LevyModel& levy() const { return *levy_; }
  const LevyModel* common_levy() const { return common_levy_; }
  const SolverConfig& config() const { return *config_; }
  const MarkQuadrature& quadrature() const { return quad_; }
  const MarkQuadrature& common_quadrature() const { return quad_common_; }

 private:
  const CoefficientSet* coeffs_;
  const LevyModel* levy_;
  const LevyModel* common_levy_;
  const SolverConfig* config_;
  MarkQuadrature quad_;
  MarkQuadrature quad_common_;
};

// Decoupled SDE for a frozen flow mu (one cloud per base grid time).
PathSolution integrate_decoupled(const CoefficientSet& coeffs, const LevyModel& levy,
                                 const MeasureFlow& flow, const Vec& x0, const PathDriver& driver,
                                 const TimeGrid& grid, const SolverConfig& config,
                                 const LevyModel* common_levy = nullptr);

// Many decoupled paths against one frozen flow; path i starts at initial[i]
// and is driven by drivers[i].
std::vector<PathSolution> integrate_decoupled_batch(const CoefficientSet& coeffs,
                                                    const LevyModel& levy, const MeasureFlow& flow,
                                                    const std::vector<Vec>& initial,
                                                    const std::vector<PathDriver>& drivers,
                                                    const TimeGrid& grid, const SolverConfig& config,
                                                    const LevyModel* common_levy = nullptr);

// States of a recorded path at the base grid times (the realized grid always
// contains them).
std::vector<Vec> states_on_grid(const PathSolution& path, const TimeGrid& grid);

// Test hook: integrate with an explicit list of big jumps in place of the
// sampled V-band events.
PathSolution integrate_decoupled_forced(const CoefficientSet& coeffs, const LevyModel& levy,
                                        const MeasureFlow& flow, const Vec& x0,
                                        const PathDriver& driver, const TimeGrid& grid,
                                        const SolverConfig& config,
                                        const std::vector<JumpEvent>& forced_big_jumps);

struct ParticleSystem {
  std::vector<PathSolution> paths;  // empty when recording is off
  MeasureFlow flow;                 // empirical measure at each base grid time
  std::vector<AppliedJump> common_jumps;
};

ParticleSystem simulate_particle_system(const CoefficientSet& coeffs, const LevyModel& levy,
                                        const std::vector<Vec>& initial,
                                        const std::vector<PathDriver>& drivers,
                                        const TimeGrid& grid, const SolverConfig& config,
                                        const LevyModel* common_levy = nullptr,
                                        bool record_paths = true);

// Convenience overload: particle i draws X_0 from base.particle(i) and is
// driven by base.particle(i).
ParticleSystem simulate_particle_system(const CoefficientSet& coeffs, const LevyModel& levy,
                                        std::size_t n, const InitialLaw& initial,
                                        const TimeGrid& grid, const NoiseStream& base,
                                        const SolverConfig& config);

std::vector<Vec> draw_initial(const InitialLaw& initial, const NoiseStream& base,
                              std::size_t count, std::uint32_t first_particle = 0);
std::vector<PathDriver> make_drivers(const NoiseStream& base, std::size_t count,
                                     std::uint32_t first_particle = 0,
                                     std::optional<NoiseStream> common = std::nullopt);

struct CoupledSystem {
  ParticleSystem system;
  std::vector<PathSolution> limit;          // X^i driven by the reference flow
  std::vector<std::vector<double>> errors;  // |X^{i,n}_t - X^i_t| per realized time
};

// Synchronous coupling: each particle and its limit copy share X_0 and noise.
CoupledSystem simulate_coupled(const CoefficientSet& coeffs, const LevyModel& levy,
                               const std::vector<Vec>& initial,
                               const std::vector<PathDriver>& drivers, const TimeGrid& grid,
                               const MeasureFlow& reference, const SolverConfig& config,
                               const LevyModel* common_levy = nullptr);

struct PicardResult {
  MeasureFlow flow;
  std::vector<double> trace;  // trace[k] = distance(mu^{k+1}, mu^k)
  bool converged = false;
  int iterations = 0;
};

// mu^{k+1} = empirical law of m decoupled paths driven by mu^k, stopped when
// the weighted sup-Wasserstein distance drops below tolerance. Reports
// non-convergence through `converged` and keeps the trace.
PicardResult picard_fixed_point(const CoefficientSet& coeffs, const LevyModel& levy,
                                const InitialLaw& initial, const TimeGrid& grid,
                                const SolverConfig& config, const NoiseStream& base,
                                const std::optional<MeasureFlow>& initial_flow = std::nullopt);

struct ConditionalPicardResult {
  std::vector<MeasureFlow> flows;  // one per common path
  std::vector<double> trace;
  bool converged = false;
  int iterations = 0;
};

// Shared machinery behind picard_fixed_point and conditional_picard: the m
// particles of every common path reuse the idiosyncratic streams of `base`.
ConditionalPicardResult picard_family(const CoefficientSet& coeffs, const LevyModel& levy,
                                      const LevyModel* common_levy, const InitialLaw& initial,
                                      const TimeGrid& grid, const SolverConfig& config,
                                      const NoiseStream& base,
                                      const std::vector<std::optional<NoiseStream>>& commons,
                                      const std::vector<MeasureFlow>* initial_flows,
                                      bool conditional_metric);

}  // namespace mvlab
