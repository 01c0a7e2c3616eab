#include "mvlab/common_noise.hpp"

namespace mvlab {

ParticleSystem simulate_common_system(const CoefficientSet& coeffs, std::size_t n,
                                      const TwoLayerNoise& noise, const InitialLaw& initial,
                                      const TimeGrid& grid, const SolverConfig& config,
                                      bool record_paths) {
  if (!noise.idiosyncratic) throw ConfigError("common system: idiosyncratic layer missing");
  if (n < 1) throw DomainError("common system: n must be >= 1");
  if (noise.common && coeffs.small_jump_uses_measure) {
    throw ConfigError("common noise requires a measure-independent small-jump coefficient f");
  }
  std::optional<NoiseStream> common;
  if (noise.common) common = noise.common_stream;
  const auto x0 = draw_initial(initial, noise.base, n);
  const auto drivers = make_drivers(noise.base, n, 0, common);
  return simulate_particle_system(coeffs, *noise.idiosyncratic, x0, drivers, grid, config,
                                  noise.common, record_paths);
}

ConditionalPicardResult conditional_picard(const CoefficientSet& coeffs, const LevyModel& levy,
                                           const LevyModel* common_levy, const InitialLaw& initial,
                                           const TimeGrid& grid, const SolverConfig& config,
                                           const NoiseStream& base,
                                           const ConditionalPicardConfig& outer) {
  if (outer.paths < 1) throw ConfigError("conditional picard: k must be >= 1");
  if (config.paths < 2) throw ConfigError("conditional picard: m must be >= 2");
  std::vector<std::optional<NoiseStream>> commons;
  commons.reserve(outer.paths);
  for (std::size_t c = 0; c < outer.paths; ++c) {
    if (common_levy) {
      commons.push_back(common_path_stream(outer.seed, outer.experiment, c));
    } else {
      commons.push_back(std::nullopt);
    }
  }
  return picard_family(coeffs, levy, common_levy, initial, grid, config, base, commons, nullptr,
                       true);
}

std::vector<ConditionalCloud> conditional_clouds(const ConditionalPicardResult& result,
                                                 std::size_t grid_index) {
  std::vector<ConditionalCloud> out;
  for (std::size_t c = 0; c < result.flows.size(); ++c) {
    out.push_back({c, result.flows[c].at_index(grid_index)});
  }
  return out;
}

RateReport run_conditional_poc(const CoefficientSet& coeffs, const LevyModel& levy,
                               const LevyModel& common_levy, const InitialLaw& initial,
                               const PoCConfig& config, std::size_t common_paths) {
  if (common_paths < 1) throw ConfigError("conditional poc: k must be >= 1");
  const CommonLayerSetup setup{&common_levy, common_paths};
  return weak_poc_impl(coeffs, levy, initial, config, &setup);
}

}  // namespace mvlab
