#pragma once

#include "mvlab/config.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace mvlab {

enum class Verdict { kPass, kFail };

struct RunResult {
  Verdict verdict = Verdict::kPass;
  nlohmann::json summary;          // also written as <subcommand>.json
  std::vector<std::string> files;  // relative to the output directory
};

// Runs one subcommand and writes CSV, JSON and manifest.json into out_dir
// (created if missing). Module errors propagate as exceptions.
RunResult run(const ExperimentConfig& config, Subcommand subcommand, const std::string& out_dir,
              int jobs);

// Deterministic table of Wasserstein identities and metric axioms.
struct SelftestRow {
  std::string check;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
std::vector<SelftestRow> wasserstein_selftest(std::uint64_t seed);

// printf("%.17g")
std::string format_real(double v);

}  // namespace mvlab
