#pragma once

#include "mvlab/chaos.hpp"
#include "mvlab/solver.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace mvlab {

// Idiosyncratic layer (one stream per particle, derived from `base`) and one
// common stream shared by every particle of a realization.
struct TwoLayerNoise {
  const LevyModel* idiosyncratic = nullptr;
  const LevyModel* common = nullptr;  // nullptr: no common layer
  NoiseStream base;
  NoiseStream common_stream;
};

// Member clouds of one common path.
struct ConditionalCloud {
  std::size_t path = 0;
  EmpiricalMeasure cloud;
};

ParticleSystem simulate_common_system(const CoefficientSet& coeffs, std::size_t n,
                                      const TwoLayerNoise& noise, const InitialLaw& initial,
                                      const TimeGrid& grid, const SolverConfig& config,
                                      bool record_paths = true);

struct ConditionalPicardConfig {
  std::size_t paths = 32;  // k outer common paths
  std::uint64_t seed = 1;
  std::uint32_t experiment = 0;
};

// Picard iteration of the conditional map on k common paths with m = config.paths
// particles each; distance is sup_t e^{-gamma t}(mean_c W_beta^beta)^(1/beta).
ConditionalPicardResult conditional_picard(const CoefficientSet& coeffs, const LevyModel& levy,
                                           const LevyModel* common_levy, const InitialLaw& initial,
                                           const TimeGrid& grid, const SolverConfig& config,
                                           const NoiseStream& base,
                                           const ConditionalPicardConfig& outer);

std::vector<ConditionalCloud> conditional_clouds(const ConditionalPicardResult& result,
                                                 std::size_t grid_index);

// Conditional propagation of chaos: the weak estimator with replicate r driven
// by common path r mod k and compared with that path's conditional flow.
RateReport run_conditional_poc(const CoefficientSet& coeffs, const LevyModel& levy,
                               const LevyModel& common_levy, const InitialLaw& initial,
                               const PoCConfig& config, std::size_t common_paths = 32);

}  // namespace mvlab
