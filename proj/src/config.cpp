#include "mvlab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace mvlab {

namespace {

using nlohmann::json;

// Absent, null and non-numeric values give the fallback; the parser reports
// the type errors.
double number_or(const json& j, const char* key, double fallback) {
  if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) return fallback;
  return j.at(key).get<double>();
}

// Field reader that records type errors instead of throwing.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& violations) : v_(violations) {}

  template <class T>
  T get(const json& j, const char* key, T fallback, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      v_.push_back(where + "." + key + ": wrong type");
      return fallback;
    }
  }

  template <class T>
  std::optional<T> opt(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return std::nullopt;
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      v_.push_back(where + "." + key + ": wrong type");
      return std::nullopt;
    }
  }

  template <class T>
  std::optional<T> required(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
      v_.push_back(where + "." + key + ": missing required field");
      return std::nullopt;
    }
    return opt<T>(j, key, where);
  }

  void fail(const std::string& what) { v_.push_back(what); }

 private:
  std::vector<std::string>& v_;
};

std::optional<MarkSampler> parse_sampler(const json& j, int dim, Reader& r, const std::string& where) {
  if (!j.is_object()) {
    r.fail(where + ": sampler must be an object");
    return std::nullopt;
  }
  const auto family = r.required<std::string>(j, "family", where);
  if (!family) return std::nullopt;
  try {
    if (*family == "annulus") {
      const auto inner = r.required<double>(j, "inner", where);
      const auto outer = r.required<double>(j, "outer", where);
      if (!inner || !outer) return std::nullopt;
      return MarkSampler::annulus(dim, *inner, *outer);
    }
    if (*family == "sphere") {
      const auto radius = r.required<double>(j, "radius", where);
      if (!radius) return std::nullopt;
      return MarkSampler::annulus(dim, *radius, *radius);
    }
    if (*family == "exponential") {
      const auto inner = r.required<double>(j, "inner", where);
      const auto decay = r.required<double>(j, "decay", where);
      const double outer = r.get<double>(j, "outer", std::numeric_limits<double>::infinity(), where);
      if (!inner || !decay) return std::nullopt;
      return MarkSampler::exponential(dim, *inner, *decay, outer);
    }
  } catch (const Error& e) {
    r.fail(where + ": " + e.what());
    return std::nullopt;
  }
  r.fail(where + ": unknown sampler family '" + *family + "'");
  return std::nullopt;
}

std::vector<std::size_t> size_list(const json& j, const char* key, Reader& r, const std::string& where) {
  std::vector<std::size_t> out;
  if (!j.is_object() || !j.contains(key)) return out;
  const auto& a = j.at(key);
  if (!a.is_array()) {
    r.fail(where + "." + key + ": must be an array");
    return out;
  }
  for (const auto& e : a) {
    if (!e.is_number_integer() || e.get<long long>() < 1) {
      r.fail(where + "." + key + ": entries must be positive integers");
      return {};
    }
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

std::vector<double> real_list(const json& j, const char* key, std::vector<double> fallback,
                              Reader& r, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const auto& a = j.at(key);
  if (!a.is_array()) {
    r.fail(where + "." + key + ": must be an array");
    return fallback;
  }
  std::vector<double> out;
  for (const auto& e : a) {
    if (!e.is_number()) {
      r.fail(where + "." + key + ": entries must be numbers");
      return fallback;
    }
    out.push_back(e.get<double>());
  }
  return out;
}

bool is_poc(Subcommand s) {
  return s == Subcommand::kPoc || s == Subcommand::kStrongPoc || s == Subcommand::kCommonNoise;
}


}  // namespace

std::optional<Subcommand> parse_subcommand(const std::string& name) {
  static const std::map<std::string, Subcommand> names{
      {"simulate", Subcommand::kSimulate},
      {"picard", Subcommand::kPicard},
      {"poc", Subcommand::kPoc},
      {"strong-poc", Subcommand::kStrongPoc},
      {"moments", Subcommand::kMoments},
      {"common-noise", Subcommand::kCommonNoise},
      {"wasserstein-selftest", Subcommand::kWassersteinSelftest},
      {"check-assumptions", Subcommand::kCheckAssumptions},
  };
  auto it = names.find(name);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

const char* subcommand_name(Subcommand s) {
  switch (s) {
    case Subcommand::kSimulate: return "simulate";
    case Subcommand::kPicard: return "picard";
    case Subcommand::kPoc: return "poc";
    case Subcommand::kStrongPoc: return "strong-poc";
    case Subcommand::kMoments: return "moments";
    case Subcommand::kCommonNoise: return "common-noise";
    case Subcommand::kWassersteinSelftest: return "wasserstein-selftest";
    case Subcommand::kCheckAssumptions: return "check-assumptions";
  }
  return "?";
}

LevyModel parse_levy(const json& j, int dim, std::vector<std::string>& violations,
                     const std::string& where) {
  Reader r(violations);
  LevyModel levy = LevyModel::zero(dim);
  if (!j.is_object()) {
    r.fail(where + ": must be an object");
    return levy;
  }
  const auto split = r.required<double>(j, "split_radius", where);
  if (split) levy.split_radius = *split;
  if (j.contains("small")) {
    const auto& s = j.at("small");
    const std::string w = where + ".small";
    const auto mode = r.get<std::string>(s, "mode", "finite", w);
    if (mode == "finite") {
      levy.small.mode = SmallMode::kFiniteActivity;
    } else if (mode == "truncated") {
      levy.small.mode = SmallMode::kTruncated;
      levy.small.epsilon = r.opt<double>(s, "epsilon", w);
      levy.small.bias_note = r.get<std::string>(s, "bias_note", "", w);
    } else {
      r.fail(w + ".mode: must be 'finite' or 'truncated'");
    }
    levy.small.rate = r.get<double>(s, "rate", 0.0, w);
    if (s.contains("sampler")) levy.small.sampler = parse_sampler(s.at("sampler"), dim, r, w + ".sampler");
  }
  if (j.contains("big")) {
    const auto& b = j.at("big");
    const std::string w = where + ".big";
    levy.big.rate = r.get<double>(b, "rate", 0.0, w);
    if (b.contains("sampler")) levy.big.sampler = parse_sampler(b.at("sampler"), dim, r, w + ".sampler");
  }
  for (auto& v : levy.violations()) violations.push_back(where + ": " + v);
  return levy;
}

double ExperimentConfig::beta() const {
  return number_or(model.params, "beta", 2.0);
}

CoefficientSet ExperimentConfig::coefficients() const {
  return make_family(model.family, dim, model.params);
}

InitialLaw ExperimentConfig::initial_law() const {
  const auto& p = initial.params;
  if (initial.family == "point") {
    Vec x0 = Vec::Zero(dim);
    if (p.contains("x0")) {
      const auto v = p.at("x0").get<std::vector<double>>();
      for (int i = 0; i < dim; ++i) x0[i] = v[static_cast<std::size_t>(i)];
    }
    return InitialLaw::point(x0);
  }
  if (initial.family == "uniform_box") {
    return InitialLaw::uniform_box(dim, number_or(p, "lo", -1.0), number_or(p, "hi", 1.0));
  }
  if (initial.family == "gaussian") {
    return InitialLaw::gaussian(dim, number_or(p, "mean", 0.0), number_or(p, "sd", 1.0));
  }
  throw ConfigError("unknown initial law '" + initial.family + "'");
}

SolverConfig ExperimentConfig::solver_config(int jobs) const {
  SolverConfig sc;
  sc.step = solver.step;
  sc.paths = solver.paths;
  sc.gamma = solver.gamma ? *solver.gamma : (solver.l1 ? 10.0 * *solver.l1 : 10.0);
  sc.tolerance = solver.tolerance;
  sc.max_iterations = solver.max_iterations;
  sc.common_random_numbers = solver.crn;
  sc.compensator_marks = solver.compensator_marks;
  sc.wasserstein.method = solver.wasserstein;
  sc.wasserstein.projections = static_cast<int>(solver.projections);
  sc.wasserstein.stream = NoiseStream{seed, {0, 0, 0, Layer::kAuxiliary}};
  sc.jobs = jobs;
  return sc;
}

TimeGrid ExperimentConfig::grid() const { return TimeGrid::uniform(solver.horizon, solver.step); }

PoCConfig ExperimentConfig::poc_config(int jobs) const {
  PoCConfig pc;
  pc.n_grid = experiment.n_grid;
  pc.replications = experiment.replications;
  pc.p = experiment.p.value_or(1.0);
  pc.q1 = experiment.q1;
  pc.q2 = experiment.q2;
  pc.horizon = solver.horizon;
  pc.step = solver.step;
  pc.eval = experiment.eval;
  pc.reference_factor = experiment.reference_factor;
  pc.seed = seed;
  pc.experiment = 1;
  pc.solver = solver_config(jobs);
  pc.jobs = jobs;
  return pc;
}

ExperimentConfig parse_config(const std::string& text, std::optional<Subcommand> subcommand) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what(),
                      {std::string("malformed JSON: ") + e.what()});
  }
  std::vector<std::string> v;
  Reader r(v);
  ExperimentConfig cfg;
  if (!doc.is_object()) {
    throw ConfigError("config must be a JSON object", {"top level must be an object"});
  }
  const auto version = r.required<int>(doc, "version", "config");
  if (version && *version != kConfigVersion) {
    r.fail("config.version: unsupported version " + std::to_string(*version));
  }
  cfg.seed = r.get<std::uint64_t>(doc, "seed", 1, "config");
  const auto dim = r.required<int>(doc, "dim", "config");
  if (dim) {
    if (*dim < 1 || *dim > kMaxDim) {
      r.fail("config.dim: must be in [1, 8]");
    } else {
      cfg.dim = *dim;
    }
  }

  // model
  if (!doc.contains("model")) {
    r.fail("config.model: missing required field");
  } else {
    const auto& m = doc.at("model");
    const auto family = r.required<std::string>(m, "family", "model");
    if (family) {
      cfg.model.family = *family;
      if (!has_family(*family)) r.fail("model.family: unknown family '" + *family + "'");
    }
    if (m.contains("params")) {
      if (!m.at("params").is_object()) {
        r.fail("model.params: must be an object");
      } else {
        cfg.model.params = m.at("params");
      }
    }
    const auto beta = r.get<double>(cfg.model.params, "beta", 2.0, "model.params");
    if (!(beta >= 1.0 && beta <= 2.0)) r.fail("model.params.beta: must lie in [1, 2]");
  }

  // noise
  if (!doc.contains("levy")) {
    r.fail("config.levy: missing required field");
  } else {
    cfg.levy = parse_levy(doc.at("levy"), cfg.dim, v, "levy");
  }
  if (doc.contains("common_levy")) cfg.common_levy = parse_levy(doc.at("common_levy"), cfg.dim, v, "common_levy");

  // initial law
  if (doc.contains("initial")) {
    const auto& j = doc.at("initial");
    cfg.initial.family = r.get<std::string>(j, "family", "point", "initial");
    cfg.initial.params = j;
    if (cfg.initial.family == "point") {
      if (j.contains("x0")) {
        const auto& x0 = j.at("x0");
        if (!x0.is_array() || x0.size() != static_cast<std::size_t>(cfg.dim)) {
          r.fail("initial.x0: must be an array of length dim");
        } else {
          for (const auto& e : x0) {
            if (!e.is_number()) r.fail("initial.x0: entries must be numbers");
          }
        }
      }
    } else if (cfg.initial.family == "uniform_box") {
      const double lo = r.get<double>(j, "lo", -1.0, "initial");
      const double hi = r.get<double>(j, "hi", 1.0, "initial");
      if (!(lo < hi)) r.fail("initial: uniform_box requires lo < hi");
    } else if (cfg.initial.family == "gaussian") {
      r.get<double>(j, "mean", 0.0, "initial");
      if (!(r.get<double>(j, "sd", 1.0, "initial") > 0.0)) r.fail("initial.sd: must be positive");
    } else {
      r.fail("initial.family: unknown initial law '" + cfg.initial.family + "'");
    }
  }

  // solver
  if (!doc.contains("solver")) {
    r.fail("config.solver: missing required field");
  } else {
    const auto& s = doc.at("solver");
    const auto T = r.required<double>(s, "T", "solver");
    const auto h = r.required<double>(s, "h", "solver");
    if (T) cfg.solver.horizon = *T;
    if (h) cfg.solver.step = *h;
    if (!(cfg.solver.horizon > 0.0) || !std::isfinite(cfg.solver.horizon)) r.fail("solver.T: must be positive");
    if (!(cfg.solver.step > 0.0)) r.fail("solver.h: h>0 required");
    if (cfg.solver.step > cfg.solver.horizon) r.fail("solver.h: must not exceed T");
    const long long m = r.get<long long>(s, "m", 1000, "solver");
    if (m < 2) r.fail("solver.m: m>=2 required");
    cfg.solver.paths = static_cast<std::size_t>(std::max(2LL, m));
    cfg.solver.gamma = r.opt<double>(s, "gamma", "solver");
    cfg.solver.l1 = r.opt<double>(s, "L1", "solver");
    if (cfg.solver.gamma && !(*cfg.solver.gamma >= 0.0)) r.fail("solver.gamma: must be >= 0");
    if (cfg.solver.l1 && !(*cfg.solver.l1 > 0.0)) r.fail("solver.L1: must be positive");
    cfg.solver.tolerance = r.get<double>(s, "tol", 1e-3, "solver");
    if (!(cfg.solver.tolerance > 0.0)) r.fail("solver.tol: must be positive");
    cfg.solver.max_iterations = r.get<int>(s, "max_iter", 20, "solver");
    if (cfg.solver.max_iterations < 1) r.fail("solver.max_iter: must be >= 1");
    cfg.solver.crn = r.get<bool>(s, "crn", true, "solver");
    const auto method = r.get<std::string>(s, "wasserstein", "auto", "solver");
    if (method == "auto") {
      cfg.solver.wasserstein = WassersteinMethod::kAuto;
    } else if (method == "exact") {
      cfg.solver.wasserstein = WassersteinMethod::kExact;
    } else if (method == "sliced") {
      cfg.solver.wasserstein = WassersteinMethod::kSliced;
    } else {
      r.fail("solver.wasserstein: must be auto, exact or sliced");
    }
    cfg.solver.projections = static_cast<std::size_t>(std::max(1LL, r.get<long long>(s, "projections", 64, "solver")));
    cfg.solver.compensator_marks =
        static_cast<std::size_t>(std::max(1LL, r.get<long long>(s, "compensator_marks", 4096, "solver")));
  }

  // experiment
  const json e = doc.contains("experiment") ? doc.at("experiment") : json::object();
  const std::string we = "experiment";
  {
    auto& x = cfg.experiment;
    if (auto n = r.opt<long long>(e, "n", we)) {
      if (*n < 1) {
        r.fail("experiment.n: must be >= 1");
      } else {
        x.n = static_cast<std::size_t>(*n);
      }
    }
    x.n_grid = size_list(e, "n_grid", r, we);
    for (std::size_t i = 1; i < x.n_grid.size(); ++i) {
      if (x.n_grid[i] <= x.n_grid[i - 1]) {
        r.fail("experiment.n_grid: must be strictly increasing");
        break;
      }
    }
    x.replications = static_cast<std::size_t>(std::max(0LL, r.get<long long>(e, "replications", 100, we)));
    x.p = r.opt<double>(e, "p", we);
    x.q1 = r.get<double>(e, "q1", 0.5, we);
    x.q2 = r.get<double>(e, "q2", 0.9, we);
    const auto eval = r.get<std::string>(e, "eval", "terminal", we);
    if (eval == "terminal") {
      x.eval = EvalMode::kTerminal;
    } else if (eval == "sup") {
      x.eval = EvalMode::kSupOverGrid;
    } else {
      r.fail("experiment.eval: must be 'terminal' or 'sup'");
    }
    x.reference_factor = static_cast<std::size_t>(std::max(0LL, r.get<long long>(e, "reference_factor", 4, we)));
    x.kind = r.get<std::string>(e, "kind", "weak", we);
    if (x.kind != "weak" && x.kind != "iid") r.fail("experiment.kind: must be 'weak' or 'iid'");
    x.k = static_cast<std::size_t>(std::max(0LL, r.get<long long>(e, "k", 32, we)));
    x.mode = r.get<std::string>(e, "mode", "poc", we);
    if (x.mode != "poc" && x.mode != "simulate") r.fail("experiment.mode: must be 'poc' or 'simulate'");
    x.scalings = real_list(e, "scalings", x.scalings, r, we);
    x.a21 = r.get<bool>(e, "a21", false, we);
    x.restart = r.get<bool>(e, "restart", false, we);
    x.restart_shift = r.get<double>(e, "restart_shift", 1.0, we);
    if (e.contains("forms")) {
      try {
        x.forms = e.at("forms").get<std::vector<std::string>>();
      } catch (const json::exception&) {
        r.fail("experiment.forms: must be an array of strings");
      }
    }
    if (e.contains("declared")) {
      try {
        x.declared = e.at("declared").get<std::map<std::string, double>>();
      } catch (const json::exception&) {
        r.fail("experiment.declared: must map assumption ids to numbers");
      }
    }
    x.trials = static_cast<std::size_t>(std::max(0LL, r.get<long long>(e, "trials", 10000, we)));
    x.box_radius = r.get<double>(e, "box_radius", 10.0, we);
    x.cloud_size = static_cast<std::size_t>(std::max(0LL, r.get<long long>(e, "cloud_size", 8, we)));
    x.ray_radii = real_list(e, "ray_radii", x.ray_radii, r, we);
    x.ball_radius = r.get<double>(e, "ball_radius", 10.0, we);
    x.tolerance = r.get<double>(e, "tolerance", 1e-9, we);
  }

  const double beta = cfg.beta();
  const auto& x = cfg.experiment;
  if (x.p) {
    if (!(*x.p >= 1.0)) r.fail("experiment.p: p>=1 required");
    if (!(*x.p < beta)) r.fail("experiment.p: p<beta required");
  }
  if (!(x.q1 >= 0.0 && x.q1 < x.q2 && x.q2 < 1.0)) r.fail("experiment.q1/q2: q1<q2<1 required");

  // Coefficients are built once here so family-level errors surface with the rest.
  std::optional<CoefficientSet> coeffs;
  if (!cfg.model.family.empty() && has_family(cfg.model.family)) {
    try {
      coeffs = cfg.coefficients();
    } catch (const ConfigError& err) {
      if (err.violations().empty()) {
        r.fail(std::string("model: ") + err.what());
      } else {
        for (const auto& s : err.violations()) r.fail("model: " + s);
      }
    } catch (const Error& err) {
      r.fail(std::string("model: ") + err.what());
    } catch (const json::exception& err) {
      r.fail(std::string("model.params: ") + err.what());
    }
  }

  if (subcommand) {
    const Subcommand s = *subcommand;
    if (is_poc(s) && !(s == Subcommand::kCommonNoise && x.mode == "simulate")) {
      if (x.n_grid.size() < 3) r.fail("experiment.n_grid: at least 3 values required");
      if (x.replications < 2) r.fail("experiment.replications: must be >= 2");
      if (x.reference_factor < 4) r.fail("experiment.reference_factor: must be >= 4");
      const double p = x.p.value_or(1.0);
      if (!x.p && !(p < beta)) r.fail("experiment.p: p<beta required");
      if (!(beta > 1.0)) r.fail("model.params.beta: propagation of chaos needs beta in (1, 2]");
      if (coeffs && coeffs->small_jump_uses_measure) {
        r.fail("model: propagation of chaos requires f independent of the measure");
      }
    }
    if (s == Subcommand::kCommonNoise) {
      if (!cfg.common_levy) r.fail("config.common_levy: required for common-noise");
      if (coeffs && !coeffs->common) r.fail("model.params.common: (f0, g0) required for common-noise");
      if (x.k < 1) r.fail("experiment.k: must be >= 1");
      if (x.mode == "simulate" && coeffs && coeffs->small_jump_uses_measure) {
        r.fail("model: common noise requires f independent of the measure");
      }
    }
    if (s == Subcommand::kMoments) {
      if (x.scalings.empty()) r.fail("experiment.scalings: must not be empty");
      for (double sc : x.scalings) {
        if (!(sc > 0.0)) {
          r.fail("experiment.scalings: entries must be positive");
          break;
        }
      }
    }
    if (s == Subcommand::kCheckAssumptions) {
      static const std::vector<std::string> known{"A1", "A1'", "A2", "A21", "A3", "B1", "B2"};
      for (const auto& f : x.forms) {
        if (std::find(known.begin(), known.end(), f) == known.end()) {
          r.fail("experiment.forms: unknown assumption '" + f + "'");
        } else if (!x.declared.count(f)) {
          r.fail("experiment.declared: missing constant for " + f);
        }
        if ((f == "B1" || f == "B2") && !cfg.common_levy) {
          r.fail("config.common_levy: required for " + f);
        }
      }
      if (x.trials < 1) r.fail("experiment.trials: must be >= 1");
      if (x.cloud_size < 1) r.fail("experiment.cloud_size: must be >= 1");
    }
  }

  if (!v.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << v.size() << " violation" << (v.size() == 1 ? "" : "s") << "):";
    for (const auto& s : v) msg << "\n  - " << s;
    throw ConfigError(msg.str(), v);
  }

  if (cfg.model.family == "cubic_interaction") {
    CubicInteractionParams p;
    const auto& j = cfg.model.params;
    p.c1 = j.value("c1", p.c1);
    p.c2 = j.value("c2", p.c2);
    p.c3 = j.value("c3", p.c3);
    p.c4 = j.value("c4", p.c4);
    const double threshold = cubic_c2_threshold(p, cfg.levy);
    if (!(p.c2 > threshold)) {
      std::ostringstream msg;
      msg << "cubic_interaction: C2 = " << p.c2 << " does not exceed 12 C3^2 C4^2 nu(|z|^2 1_U) = "
          << threshold << "; the one-sided Lipschitz constant may not exist";
      cfg.warnings.push_back(msg.str());
    }
  }

  cfg.source = doc;
  cfg.source["seed"] = cfg.seed;
  return cfg;
}

ExperimentConfig load_config(const std::string& path, std::optional<Subcommand> subcommand) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), subcommand);
}

std::string canonical_json(const ExperimentConfig& config) { return config.source.dump(); }

std::uint64_t config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_json(config)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace mvlab
