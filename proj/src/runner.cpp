#include "mvlab/runner.hpp"

#include "mvlab/assumptions.hpp"
#include "mvlab/chaos.hpp"
#include "mvlab/common_noise.hpp"
#include "mvlab/wasserstein.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

namespace mvlab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

std::vector<std::string> vec_cells(const Vec& x) {
  std::vector<std::string> out;
  for (int i = 0; i < x.size(); ++i) out.push_back(format_real(x[i]));
  return out;
}

std::vector<std::string> coord_header(const char* prefix, int dim) {
  std::vector<std::string> out;
  for (int i = 0; i < dim; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void write_flow(const fs::path& path, const MeasureFlow& flow, int dim) {
  auto header = std::vector<std::string>{"time"};
  for (auto& h : coord_header("mean_", dim)) header.push_back(h);
  header.push_back("second_moment");
  header.push_back("size");
  CsvWriter csv(path, header);
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const auto& c = flow.at_index(k);
    std::vector<std::string> row{format_real(flow.grid()[k])};
    for (auto& s : vec_cells(c.mean())) row.push_back(s);
    row.push_back(format_real(c.second_moment()));
    row.push_back(std::to_string(c.size()));
    csv.row(row);
  }
}

void write_paths(const fs::path& path, const std::vector<PathSolution>& paths, const TimeGrid& grid,
                 int dim) {
  auto header = std::vector<std::string>{"particle", "time"};
  for (auto& h : coord_header("x_", dim)) header.push_back(h);
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto states = states_on_grid(paths[i], grid);
    for (std::size_t k = 0; k < states.size(); ++k) {
      std::vector<std::string> row{std::to_string(i), format_real(grid.base[k])};
      for (auto& s : vec_cells(states[k])) row.push_back(s);
      csv.row(row);
    }
  }
}

void write_jumps(const fs::path& path, const std::vector<PathSolution>& paths, int dim) {
  auto header = std::vector<std::string>{"particle", "time", "layer"};
  for (auto& h : coord_header("mark_", dim)) header.push_back(h);
  for (auto& h : coord_header("increment_", dim)) header.push_back(h);
  CsvWriter csv(path, header);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    for (const auto& jmp : paths[i].jumps) {
      std::vector<std::string> row{std::to_string(i), format_real(jmp.time),
                                   jmp.common ? "common" : "own"};
      for (auto& s : vec_cells(jmp.mark)) row.push_back(s);
      for (auto& s : vec_cells(jmp.increment)) row.push_back(s);
      csv.row(row);
    }
  }
}

json fit_json(const SlopeFit& f) {
  return {{"slope", f.slope}, {"slope_se", f.slope_se}, {"intercept", f.intercept}, {"weighted", f.weighted}};
}

json report_json(const RateReport& r) {
  json pts = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    json p{{"n", r.points[i].n}, {"estimate", r.points[i].estimate}, {"std_error", r.points[i].std_error}};
    if (i < r.interacting.size()) p["interacting"] = r.interacting[i];
    if (i < r.iid.size()) p["iid"] = r.iid[i];
    pts.push_back(p);
  }
  return {{"experiment", r.experiment},
          {"points", pts},
          {"fit", fit_json(r.fit)},
          {"theoretical", r.theoretical},
          {"slack", r.slack},
          {"threshold", r.theoretical + r.slack},
          {"reference_converged", r.reference_converged},
          {"reference_paths", r.reference_paths},
          {"pass", r.pass}};
}

void write_rate_csv(const fs::path& path, const RateReport& r) {
  CsvWriter csv(path, {"n", "estimate", "std_error", "interacting", "iid"});
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    csv.row({format_real(r.points[i].n), format_real(r.points[i].estimate),
             format_real(r.points[i].std_error),
             i < r.interacting.size() ? format_real(r.interacting[i]) : "",
             i < r.iid.size() ? format_real(r.iid[i]) : ""});
  }
}

NoiseStream run_base(const ExperimentConfig& cfg, std::uint32_t experiment) {
  return NoiseStream{cfg.seed, {experiment, 0, 0, Layer::kInitial}};
}

AssumptionId assumption_from(const std::string& s) {
  if (s == "A1") return AssumptionId::kA1;
  if (s == "A1'") return AssumptionId::kA1Prime;
  if (s == "A2") return AssumptionId::kA2;
  if (s == "A21") return AssumptionId::kA21;
  if (s == "A3") return AssumptionId::kA3;
  if (s == "B1") return AssumptionId::kB1;
  if (s == "B2") return AssumptionId::kB2;
  throw ConfigError("unknown assumption '" + s + "'");
}

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// Job stream ids recorded in the manifest: (experiment, replica) pairs.
json job_seeds(std::uint64_t seed, std::uint32_t experiment, std::size_t count) {
  json out = json::array();
  for (std::size_t r = 0; r < std::min<std::size_t>(count, 100000); ++r) {
    const std::uint64_t id = (static_cast<std::uint64_t>(experiment) << 32) | r;
    out.push_back({{"experiment", experiment}, {"replica", r}, {"seed", hex64(mix64(seed ^ mix64(id)))}});
  }
  return out;
}

RunResult run_simulate(const ExperimentConfig& cfg, const fs::path& dir, int jobs, json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const TimeGrid grid = cfg.grid();
  const std::size_t n = cfg.experiment.n.value_or(cfg.solver.paths);
  const NoiseStream base = run_base(cfg, 3);
  const SolverConfig sc = cfg.solver_config(jobs);
  const auto sys = simulate_particle_system(coeffs, cfg.levy, n, cfg.initial_law(), grid, base, sc);
  write_paths(dir / "paths.csv", sys.paths, grid, cfg.dim);
  write_flow(dir / "flow.csv", sys.flow, cfg.dim);
  write_jumps(dir / "jumps.csv", sys.paths, cfg.dim);
  std::size_t jumps = 0;
  for (const auto& p : sys.paths) jumps += p.jumps.size();
  RunResult res;
  res.summary = {{"n", n},
                 {"steps", grid.steps()},
                 {"big_jumps", jumps},
                 {"terminal_mean", vec_json(sys.flow.at_index(sys.flow.size() - 1).mean())},
                 {"terminal_second_moment", sys.flow.at_index(sys.flow.size() - 1).second_moment()}};
  res.files = {"paths.csv", "flow.csv", "jumps.csv"};
  jobs_out = job_seeds(cfg.seed, 3, 1);
  return res;
}

RunResult run_picard(const ExperimentConfig& cfg, const fs::path& dir, int jobs, json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const TimeGrid grid = cfg.grid();
  const InitialLaw init = cfg.initial_law();
  const NoiseStream base = run_base(cfg, 2);
  const SolverConfig sc = cfg.solver_config(jobs);
  const PicardResult first = picard_fixed_point(coeffs, cfg.levy, init, grid, sc, base);

  CsvWriter trace(dir / "picard_trace.csv", {"run", "iteration", "distance", "ratio"});
  auto emit = [&](const char* run, const std::vector<double>& t) {
    for (std::size_t k = 0; k < t.size(); ++k) {
      trace.row({run, std::to_string(k + 1), format_real(t[k]),
                 k > 0 && t[k - 1] > 0.0 ? format_real(t[k] / t[k - 1]) : ""});
    }
  };
  emit("primary", first.trace);
  write_flow(dir / "flow.csv", first.flow, cfg.dim);

  RunResult res;
  res.files = {"picard_trace.csv", "flow.csv"};
  res.summary = {{"converged", first.converged},
                 {"iterations", first.iterations},
                 {"trace", first.trace},
                 {"gamma", sc.gamma},
                 {"tolerance", sc.tolerance},
                 {"paths", sc.paths}};
  bool pass = first.converged;
  if (cfg.experiment.restart) {
    auto x0 = draw_initial(init, base, sc.paths);
    for (auto& x : x0) x.array() += cfg.experiment.restart_shift;
    const MeasureFlow start = MeasureFlow::constant(grid.base, EmpiricalMeasure::from_points(x0));
    const PicardResult second = picard_fixed_point(coeffs, cfg.levy, init, grid, sc, base, start);
    emit("restart", second.trace);
    const double gap = flow_distance(first.flow, second.flow, coeffs.beta, sc.gamma, sc.wasserstein);
    res.summary["restart"] = {{"converged", second.converged},
                              {"iterations", second.iterations},
                              {"trace", second.trace},
                              {"distance_to_primary", gap},
                              {"bound", 2.0 * sc.tolerance}};
    pass = pass && second.converged && gap <= 2.0 * sc.tolerance;
  }
  res.summary["pass"] = pass;
  res.verdict = pass ? Verdict::kPass : Verdict::kFail;
  jobs_out = job_seeds(cfg.seed, 2, 1);
  return res;
}

RunResult run_rate(const ExperimentConfig& cfg, Subcommand sub, const fs::path& dir, int jobs,
                   json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const PoCConfig pc = cfg.poc_config(jobs);
  RateReport report;
  if (sub == Subcommand::kStrongPoc) {
    report = run_strong_poc(coeffs, cfg.levy, cfg.initial_law(), pc);
  } else if (sub == Subcommand::kCommonNoise) {
    report = run_conditional_poc(coeffs, cfg.levy, *cfg.common_levy, cfg.initial_law(), pc, cfg.experiment.k);
  } else if (cfg.experiment.kind == "iid") {
    report = run_iid_rate(coeffs, cfg.levy, cfg.initial_law(), pc);
  } else {
    report = run_weak_poc(coeffs, cfg.levy, cfg.initial_law(), pc);
  }
  write_rate_csv(dir / "rate.csv", report);
  RunResult res;
  res.files = {"rate.csv"};
  res.summary = report_json(report);
  res.verdict = report.pass ? Verdict::kPass : Verdict::kFail;
  jobs_out = job_seeds(cfg.seed, pc.experiment, pc.n_grid.size() * pc.replications);
  return res;
}

RunResult run_common_simulate(const ExperimentConfig& cfg, const fs::path& dir, int jobs,
                              json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const TimeGrid grid = cfg.grid();
  const std::size_t n = cfg.experiment.n.value_or(cfg.solver.paths);
  TwoLayerNoise noise{&cfg.levy, &*cfg.common_levy, run_base(cfg, 4), common_path_stream(cfg.seed, 4, 0)};
  const auto sys = simulate_common_system(coeffs, n, noise, cfg.initial_law(), grid, cfg.solver_config(jobs));
  write_paths(dir / "paths.csv", sys.paths, grid, cfg.dim);
  write_flow(dir / "flow.csv", sys.flow, cfg.dim);
  write_jumps(dir / "jumps.csv", sys.paths, cfg.dim);
  RunResult res;
  res.files = {"paths.csv", "flow.csv", "jumps.csv"};
  res.summary = {{"n", n},
                 {"common_jumps", sys.common_jumps.size()},
                 {"terminal_mean", vec_json(sys.flow.at_index(sys.flow.size() - 1).mean())}};
  jobs_out = job_seeds(cfg.seed, 4, 1);
  return res;
}

RunResult run_moments(const ExperimentConfig& cfg, const fs::path& dir, int jobs, json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const MomentReport rep =
      run_moment_experiment(coeffs, cfg.levy, cfg.initial_law(), cfg.experiment.scalings, cfg.grid(),
                            cfg.solver_config(jobs), run_base(cfg, 5), cfg.experiment.a21);
  CsvWriter csv(dir / "moments.csv", {"scaling", "initial_moment", "terminal_moment", "max_time_moment",
                                      "sup_moment", "ratio", "sup_ratio"});
  json rows = json::array();
  for (const auto& r : rep.rows) {
    csv.row({format_real(r.scaling), format_real(r.initial_moment), format_real(r.terminal_moment),
             format_real(r.max_time_moment), format_real(r.sup_moment), format_real(r.ratio),
             format_real(r.sup_ratio)});
    rows.push_back({{"scaling", r.scaling},
                    {"initial_moment", r.initial_moment},
                    {"terminal_moment", r.terminal_moment},
                    {"max_time_moment", r.max_time_moment},
                    {"sup_moment", r.sup_moment},
                    {"ratio", r.ratio},
                    {"sup_ratio", r.sup_ratio}});
  }
  RunResult res;
  res.files = {"moments.csv"};
  res.summary = {{"rows", rows},
                 {"spread", rep.spread},
                 {"threshold", rep.threshold},
                 {"sup_variant", rep.sup_variant},
                 {"pass", rep.pass}};
  res.verdict = rep.pass ? Verdict::kPass : Verdict::kFail;
  jobs_out = job_seeds(cfg.seed, 5, 1);
  return res;
}

RunResult run_selftest(const ExperimentConfig& cfg, const fs::path& dir, json& jobs_out) {
  const auto rows = wasserstein_selftest(cfg.seed);
  CsvWriter csv(dir / "selftest.csv", {"check", "value", "expected", "tolerance", "pass"});
  json arr = json::array();
  bool all = true;
  for (const auto& r : rows) {
    csv.row({r.check, format_real(r.value), format_real(r.expected), format_real(r.tolerance),
             r.pass ? "true" : "false"});
    arr.push_back({{"check", r.check}, {"value", r.value}, {"expected", r.expected},
                   {"tolerance", r.tolerance}, {"pass", r.pass}});
    all = all && r.pass;
  }
  RunResult res;
  res.files = {"selftest.csv"};
  res.summary = {{"checks", arr}, {"pass", all}};
  res.verdict = all ? Verdict::kPass : Verdict::kFail;
  jobs_out = job_seeds(cfg.seed, 6, 1);
  return res;
}

RunResult run_assumptions(const ExperimentConfig& cfg, const fs::path& dir, int jobs, json& jobs_out) {
  const CoefficientSet coeffs = cfg.coefficients();
  const auto& x = cfg.experiment;
  BoxSamplerOptions box;
  box.dim = cfg.dim;
  box.radius = x.box_radius;
  box.cloud_size = x.cloud_size;
  box.cloud_radius = x.box_radius / 2.0;
  box.ray_radii = x.ray_radii;
  const TupleSampler sampler = make_box_sampler(box);

  CsvWriter csv(dir / "assumptions.csv", {"assumption", "trials", "worst_ratio", "worst_jump_ratio",
                                          "declared", "witness_trial", "pass"});
  json arr = json::array();
  bool all = true;
  std::optional<MeasureFlow> flow;
  for (const auto& form : x.forms) {
    const AssumptionId id = assumption_from(form);
    CheckOptions opt;
    opt.declared = x.declared.at(form);
    opt.trials = x.trials;
    opt.tolerance = x.tolerance;
    opt.seed = cfg.seed;
    opt.p = x.p.value_or(0.0);
    opt.common_levy = cfg.common_levy ? &*cfg.common_levy : nullptr;
    opt.quadrature_marks = cfg.solver.compensator_marks;
    opt.jobs = jobs;
    AssumptionReport rep;
    switch (id) {
      case AssumptionId::kA1:
      case AssumptionId::kA1Prime:
      case AssumptionId::kB1:
        rep = check_one_sided_lipschitz(coeffs, cfg.levy, sampler, opt, id);
        break;
      case AssumptionId::kA2:
      case AssumptionId::kA21:
      case AssumptionId::kB2:
        rep = check_coercivity(coeffs, cfg.levy, sampler, opt, id);
        break;
      case AssumptionId::kA3:
        if (!flow) {
          flow = picard_fixed_point(coeffs, cfg.levy, cfg.initial_law(), cfg.grid(), cfg.solver_config(jobs),
                                    run_base(cfg, 7))
                     .flow;
        }
        rep = check_local_boundedness(coeffs, cfg.levy, *flow, x.ball_radius, opt);
        break;
    }
    csv.row({form, std::to_string(rep.trials), format_real(rep.worst_ratio),
             format_real(rep.worst_jump_ratio), format_real(rep.declared),
             std::to_string(rep.witness_trial), rep.pass ? "true" : "false"});
    json witness = json::object();
    if (rep.witness.x.size()) witness["x"] = vec_json(rep.witness.x);
    if (rep.witness.y.size()) witness["y"] = vec_json(rep.witness.y);
    if (rep.witness.mu1.size()) {
      json c = json::array();
      for (std::size_t i = 0; i < rep.witness.mu1.size(); ++i) c.push_back(vec_json(rep.witness.mu1.point(i)));
      witness["mu1"] = c;
    }
    if (rep.witness.mu2.size()) {
      json c = json::array();
      for (std::size_t i = 0; i < rep.witness.mu2.size(); ++i) c.push_back(vec_json(rep.witness.mu2.point(i)));
      witness["mu2"] = c;
    }
    arr.push_back({{"assumption", form},
                   {"trials", rep.trials},
                   {"worst_ratio", rep.worst_ratio},
                   {"worst_jump_ratio", rep.worst_jump_ratio},
                   {"declared", rep.declared},
                   {"tolerance", rep.tolerance},
                   {"witness_trial", rep.witness_trial},
                   {"witness", witness},
                   {"pass", rep.pass}});
    all = all && rep.pass;
  }
  RunResult res;
  res.files = {"assumptions.csv"};
  res.summary = {{"checks", arr}, {"warnings", cfg.warnings}, {"pass", all}};
  res.verdict = all ? Verdict::kPass : Verdict::kFail;
  jobs_out = job_seeds(cfg.seed, 0, x.trials);
  return res;
}

}  // namespace

RunResult run(const ExperimentConfig& config, Subcommand subcommand, const std::string& out_dir,
              int jobs) {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create output directory '" + out_dir + "': " + ec.message());

  const auto start = std::chrono::steady_clock::now();
  json jobs_json = json::array();
  RunResult res;
  switch (subcommand) {
    case Subcommand::kSimulate: res = run_simulate(config, dir, jobs, jobs_json); break;
    case Subcommand::kPicard: res = run_picard(config, dir, jobs, jobs_json); break;
    case Subcommand::kPoc:
    case Subcommand::kStrongPoc: res = run_rate(config, subcommand, dir, jobs, jobs_json); break;
    case Subcommand::kCommonNoise:
      if (!config.common_levy) throw ConfigError("common-noise requires a common_levy block");
      res = config.experiment.mode == "simulate" ? run_common_simulate(config, dir, jobs, jobs_json)
                                                 : run_rate(config, subcommand, dir, jobs, jobs_json);
      break;
    case Subcommand::kMoments: res = run_moments(config, dir, jobs, jobs_json); break;
    case Subcommand::kWassersteinSelftest: res = run_selftest(config, dir, jobs_json); break;
    case Subcommand::kCheckAssumptions: res = run_assumptions(config, dir, jobs, jobs_json); break;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::string name = subcommand_name(subcommand);
  res.summary["subcommand"] = name;
  res.summary["warnings"] = config.warnings;
  write_json(dir / (name + ".json"), res.summary);
  res.files.push_back(name + ".json");

  json manifest{{"config_hash", hex64(config_hash(config))},
                {"config", config.source},
                {"version", kVersion},
                {"seed", config.seed},
                {"subcommand", name},
                {"jobs", jobs},
                {"wall_time_seconds", wall},
                {"verdict", res.verdict == Verdict::kPass ? "pass" : "fail"},
                {"outputs", res.files},
                {"job_seeds", jobs_json}};
  write_json(dir / "manifest.json", manifest);
  res.files.push_back("manifest.json");
  return res;
}

std::vector<SelftestRow> wasserstein_selftest(std::uint64_t seed) {
  std::vector<SelftestRow> rows;
  auto add = [&](std::string name, double value, double expected, double tol) {
    rows.push_back({std::move(name), value, expected, tol, std::abs(value - expected) <= tol});
  };
  auto cloud = [](RandomStream& rng, int dim, std::size_t n) {
    std::vector<Vec> pts;
    for (std::size_t i = 0; i < n; ++i) {
      Vec v(dim);
      for (int k = 0; k < dim; ++k) v[k] = rng.normal();
      pts.push_back(v);
    }
    return EmpiricalMeasure::from_points(pts);
  };
  RandomStream rng(seed, {6, 0, 0, Layer::kAuxiliary});

  // Sorted coupling against the assignment solver in 1D.
  double worst_1d = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto a = cloud(rng, 1, 40), b = cloud(rng, 1, 40);
    for (double p : {1.0, 1.5, 2.0}) {
      worst_1d = std::max(worst_1d, std::abs(w_p_1d(a, b, p) - w_p_exact(a, b, p).distance));
    }
  }
  add("1d_sorted_vs_assignment", worst_1d, 0.0, 1e-9);

  // Assignment against exhaustive permutations.
  double worst_perm = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t % 6);
    const auto a = cloud(rng, 2, n), b = cloud(rng, 2, n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      KahanSum s;
      for (std::size_t i = 0; i < n; ++i) s.add(std::pow((a.point(i) - b.point(perm[i])).norm(), 1.5));
      best = std::min(best, s.value() / static_cast<double>(n));
    } while (std::next_permutation(perm.begin(), perm.end()));
    worst_perm = std::max(worst_perm, std::abs(w_p_exact(a, b, 1.5).plan.cost - best));
  }
  add("assignment_vs_permutations", worst_perm, 0.0, 1e-9);

  const auto a = cloud(rng, 3, 30), b = cloud(rng, 3, 30), c = cloud(rng, 3, 30);
  add("identity", w_p_exact(a, a, 2.0).distance, 0.0, 0.0);
  add("symmetry", w_p_exact(a, b, 2.0).distance - w_p_exact(b, a, 2.0).distance, 0.0, 1e-12);
  const double ab = w_p_exact(a, b, 2.0).distance, bc = w_p_exact(b, c, 2.0).distance,
               ac = w_p_exact(a, c, 2.0).distance;
  add("triangle_slack_nonnegative", std::min(0.0, ab + bc - ac), 0.0, 1e-12);
  {
    std::vector<Vec> shifted;
    Vec shift(3);
    shift << 0.3, -1.2, 2.0;
    for (std::size_t i = 0; i < a.size(); ++i) shifted.push_back(a.point(i) + shift);
    add("translation", w_p_exact(a, EmpiricalMeasure::from_points(shifted), 1.0).distance, shift.norm(), 1e-9);
  }
  {
    Vec x(2), y(2);
    x << 3.0, 0.0;
    y << 0.0, 4.0;
    add("dirac_pair", w_p_exact(EmpiricalMeasure::dirac(x), EmpiricalMeasure::dirac(y), 1.7).distance, 5.0, 1e-12);
  }
  {
    const auto s = w_p_sliced(a, b, 2.0, 64, NoiseStream{seed, {6, 1, 0, Layer::kAuxiliary}});
    add("sliced_not_above_exact", std::max(0.0, s.distance - ab), 0.0, 1e-12);
  }
  {
    bool threw = false;
    try {
      (void)w_p_exact(a, b, 2.0, 8);
    } catch (const SizeError&) {
      threw = true;
    }
    add("size_cap_enforced", threw ? 1.0 : 0.0, 1.0, 0.0);
  }
  return rows;
}

}  // namespace mvlab
