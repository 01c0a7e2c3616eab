#pragma once

#include "mvlab/chaos.hpp"
#include "mvlab/coefficients.hpp"
#include "mvlab/levy.hpp"
#include "mvlab/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mvlab {

inline constexpr int kConfigVersion = 1;

enum class Subcommand {
  kSimulate,
  kPicard,
  kPoc,
  kStrongPoc,
  kMoments,
  kCommonNoise,
  kWassersteinSelftest,
  kCheckAssumptions,
};

std::optional<Subcommand> parse_subcommand(const std::string& name);
const char* subcommand_name(Subcommand s);

struct ModelBlock {
  std::string family;
  nlohmann::json params = nlohmann::json::object();
};

struct SolverBlock {
  double horizon = 1.0;
  double step = 0.01;
  std::size_t paths = 1000;
  std::optional<double> gamma;
  std::optional<double> l1;  // gamma defaults to 10 * L1 when given
  double tolerance = 1e-3;
  int max_iterations = 20;
  bool crn = true;
  WassersteinMethod wasserstein = WassersteinMethod::kAuto;
  std::size_t projections = 64;
  std::size_t compensator_marks = 4096;
};

struct ExperimentBlock {
  // simulate
  std::optional<std::size_t> n;
  // poc, strong-poc, common-noise
  std::vector<std::size_t> n_grid;
  std::size_t replications = 100;
  std::optional<double> p;
  double q1 = 0.5;
  double q2 = 0.9;
  EvalMode eval = EvalMode::kTerminal;
  std::size_t reference_factor = 4;
  std::string kind = "weak";  // poc: weak | iid
  std::size_t k = 32;          // common-noise outer paths
  std::string mode = "poc";    // common-noise: poc | simulate
  // moments
  std::vector<double> scalings{1.0, 2.0, 4.0, 8.0};
  bool a21 = false;
  // picard: second run from a perturbed initial flow
  bool restart = false;
  double restart_shift = 1.0;
  // check-assumptions
  std::vector<std::string> forms{"A1", "A2"};
  std::map<std::string, double> declared;
  std::size_t trials = 10000;
  double box_radius = 10.0;
  std::size_t cloud_size = 8;
  std::vector<double> ray_radii{10.0, 100.0, 1000.0};
  double ball_radius = 10.0;
  double tolerance = 1e-9;
};

struct InitialBlock {
  std::string family = "point";
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 1;
  int dim = 1;
  ModelBlock model;
  LevyModel levy;
  std::optional<LevyModel> common_levy;
  InitialBlock initial;
  SolverBlock solver;
  ExperimentBlock experiment;
  std::vector<std::string> warnings;
  nlohmann::json source;  // the parsed document, seed applied

  CoefficientSet coefficients() const;
  InitialLaw initial_law() const;
  SolverConfig solver_config(int jobs) const;
  TimeGrid grid() const;
  PoCConfig poc_config(int jobs) const;
  double beta() const;
};

// Parses and validates. Every violation is collected into one ConfigError.
// With a subcommand, its experiment-specific preconditions are enforced too.
ExperimentConfig parse_config(const std::string& text,
                              std::optional<Subcommand> subcommand = std::nullopt);
ExperimentConfig load_config(const std::string& path,
                             std::optional<Subcommand> subcommand = std::nullopt);

LevyModel parse_levy(const nlohmann::json& j, int dim, std::vector<std::string>& violations,
                     const std::string& where);

// Canonical text (sorted keys, compact) and its FNV-1a hash.
std::string canonical_json(const ExperimentConfig& config);
std::uint64_t config_hash(const ExperimentConfig& config);

}  // namespace mvlab
