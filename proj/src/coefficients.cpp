#include "mvlab/coefficients.hpp"

#include <cmath>
#include <mutex>

namespace mvlab {

namespace {

// I(x) = mu(|h(x - .)|^beta)^(1/beta); O(1) via cached moments when h is
// linear and beta = 2.
double fast_interaction(const EmpiricalMeasure& mu, const Vec& x, const Kernel& h, double beta) {
  if (h.kind == Kernel::Kind::kZero) return 0.0;
  if (h.kind == Kernel::Kind::kLinear && beta == 2.0) {
    const double sq = x.squaredNorm() - 2.0 * x.dot(mu.mean()) + mu.second_moment();
    return std::abs(h.scale) * std::sqrt(std::max(0.0, sq));
  }
  return interaction_term(mu, x, h, beta);
}

Kernel kernel_from_json(const nlohmann::json& j) {
  if (j.is_null()) return Kernel::linear(1.0);
  const std::string type = j.value("type", std::string("linear"));
  const double scale = j.value("scale", 1.0);
  if (type == "linear") return Kernel::linear(scale);
  if (type == "tanh") return Kernel::tanh(scale);
  if (type == "zero") return Kernel::zero();
  throw ConfigError("unknown interaction kernel '" + type + "'");
}

void attach_common(CoefficientSet& c, const nlohmann::json& params) {
  if (params.contains("common")) {
    const auto& j = params.at("common");
    c.common = make_linear_common(j.value("f0_scale", 0.0), j.value("g0_scale", 0.0));
  }
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, FamilyFactory> factories;
};

Registry& registry() {
  static Registry* r = [] {
    auto* reg = new Registry;
    reg->factories["cubic_interaction"] = [](int dim, const nlohmann::json& j) {
      CubicInteractionParams p;
      p.c1 = j.value("c1", p.c1);
      p.c2 = j.value("c2", p.c2);
      p.c3 = j.value("c3", p.c3);
      p.c4 = j.value("c4", p.c4);
      p.beta = j.value("beta", p.beta);
      p.kernel = kernel_from_json(j.value("kernel", nlohmann::json()));
      p.small_jump_uses_measure = j.value("f_uses_measure", p.small_jump_uses_measure);
      auto c = make_cubic_interaction(dim, p);
      attach_common(c, j);
      return c;
    };
    reg->factories["linear_meanfield"] = [](int dim, const nlohmann::json& j) {
      LinearMeanfieldParams p;
      p.a = j.value("a", p.a);
      p.c = j.value("c", p.c);
      p.gamma_f = j.value("gamma_f", p.gamma_f);
      p.g_scale = j.value("g_scale", p.g_scale);
      p.beta = j.value("beta", p.beta);
      auto c = make_linear_meanfield(dim, p);
      attach_common(c, j);
      return c;
    };
    reg->factories["frozen"] = [](int dim, const nlohmann::json& j) {
      FrozenParams p;
      p.a = j.value("a", p.a);
      p.gamma_f = j.value("gamma_f", p.gamma_f);
      p.g_scale = j.value("g_scale", p.g_scale);
      p.beta = j.value("beta", p.beta);
      auto c = make_frozen(dim, p);
      attach_common(c, j);
      return c;
    };
    reg->factories["polynomial_drift"] = [](int dim, const nlohmann::json& j) {
      PolynomialDriftParams p;
      p.a1 = j.value("a1", p.a1);
      p.a3 = j.value("a3", p.a3);
      p.gamma_f = j.value("gamma_f", p.gamma_f);
      p.g_scale = j.value("g_scale", p.g_scale);
      p.beta = j.value("beta", p.beta);
      auto c = make_polynomial_drift(dim, p);
      attach_common(c, j);
      return c;
    };
    return reg;
  }();
  return *r;
}

CoefficientSet linear_jumps(int dim, double beta, double gamma_f, double g_scale) {
  CoefficientSet c;
  c.dim = dim;
  c.beta = beta;
  c.small_jump = [gamma_f](const Vec&, const EmpiricalMeasure&, const Vec& z) -> Vec {
    return gamma_f * z;
  };
  c.small_jump_scale = [gamma_f](const Vec&, const EmpiricalMeasure&) { return gamma_f; };
  c.big_jump = [g_scale](const Vec&, const EmpiricalMeasure&, const Vec& z) -> Vec {
    return g_scale * z;
  };
  c.small_jump_uses_measure = false;
  return c;
}

}  // namespace

void CoefficientSet::validate() const {
  if (!(beta >= 1.0 && beta <= 2.0)) throw ConfigError("coefficients: beta must lie in [1, 2]");
  if (dim < 1 || dim > kMaxDim) throw ConfigError("coefficients: dimension must be in [1, 8]");
  if (!drift || !small_jump || !big_jump) throw ConfigError("coefficients: b, f and g are required");
  if (common && (!common->small_jump || !common->big_jump)) {
    throw ConfigError("coefficients: common pair needs both f0 and g0");
  }
}

MarkQuadrature MarkQuadrature::build(const LevyModel& levy, Band band, std::size_t count,
                                     std::uint64_t seed) {
  MarkQuadrature q;
  q.rate = levy.rate(band);
  const MarkSampler* s = levy.sampler(band);
  if (q.rate == 0.0 || s == nullptr) return q;
  RandomStream rng(seed, {kMaxExperimentId, 1, 0, Layer::kAuxiliary});
  q.marks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) q.marks.push_back(s->sample(rng));
  return q;
}

Vec small_jump_compensator(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                           const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu) {
  if (levy.small.rate == 0.0) return Vec::Zero(x.size());
  if (scale) return scale(x, mu) * levy.small_mean();
  if (quad.marks.empty()) throw ConfigError("compensator: no quadrature marks for custom f");
  Vec acc = Vec::Zero(x.size());
  for (const auto& z : quad.marks) acc += f(x, mu, z);
  return (quad.rate / static_cast<double>(quad.marks.size())) * acc;
}

double small_jump_square_gap(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                             const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu1,
                             const Vec& y, const EmpiricalMeasure& mu2) {
  if (levy.small.rate == 0.0) return 0.0;
  if (scale) {
    const double gap = scale(x, mu1) - scale(y, mu2);
    return gap * gap * levy.small_second_moment();
  }
  if (quad.marks.empty()) throw ConfigError("square gap: no quadrature marks for custom f");
  KahanSum acc;
  for (const auto& z : quad.marks) acc.add((f(x, mu1, z) - f(y, mu2, z)).squaredNorm());
  return quad.rate * acc.value() / static_cast<double>(quad.marks.size());
}

CoefficientSet make_cubic_interaction(int dim, const CubicInteractionParams& p) {
  if (!(p.c1 > 0 && p.c2 > 0 && p.c3 > 0 && p.c4 > 0)) {
    throw ConfigError("cubic_interaction: C1..C4 must be positive");
  }
  CoefficientSet c;
  c.family = "cubic_interaction";
  c.dim = dim;
  c.beta = p.beta;
  const Kernel h = p.kernel;
  const double beta = p.beta;
  c.drift = [p, h, beta](const Vec& x, const EmpiricalMeasure& mu) -> Vec {
    const double inter = fast_interaction(mu, x, h, beta);
    return (p.c1 - p.c2 * x.squaredNorm()) * x + Vec::Constant(x.size(), inter);
  };
  if (p.small_jump_uses_measure) {
    c.small_jump_scale = [p, h, beta](const Vec& x, const EmpiricalMeasure& mu) {
      return p.c3 * (1.0 + p.c4 * x.squaredNorm() + fast_interaction(mu, x, h, beta));
    };
  } else {
    c.small_jump_scale = [p](const Vec& x, const EmpiricalMeasure&) {
      return p.c3 * (1.0 + p.c4 * x.squaredNorm());
    };
  }
  c.small_jump = [scale = c.small_jump_scale](const Vec& x, const EmpiricalMeasure& mu,
                                              const Vec& z) -> Vec { return scale(x, mu) * z; };
  c.big_jump = [h, beta](const Vec& x, const EmpiricalMeasure& mu, const Vec& z) -> Vec {
    const double amp = 1.0 + x.norm() + fast_interaction(mu, x, h, beta);
    return amp * (Vec::Ones(x.size()) + z);
  };
  c.measure_dependent = h.kind != Kernel::Kind::kZero;
  c.small_jump_uses_measure = p.small_jump_uses_measure && c.measure_dependent;
  return c;
}

double cubic_c2_threshold(const CubicInteractionParams& p, const LevyModel& levy) {
  return 12.0 * p.c3 * p.c3 * p.c4 * p.c4 * levy.small_second_moment();
}

CoefficientSet make_linear_meanfield(int dim, const LinearMeanfieldParams& p) {
  CoefficientSet c = linear_jumps(dim, p.beta, p.gamma_f, p.g_scale);
  c.family = "linear_meanfield";
  c.drift = [a = p.a, cc = p.c](const Vec& x, const EmpiricalMeasure& mu) -> Vec {
    return -a * x + cc * mu.mean();
  };
  c.measure_dependent = p.c != 0.0;
  return c;
}

CoefficientSet make_frozen(int dim, const FrozenParams& p) {
  CoefficientSet c = linear_jumps(dim, p.beta, p.gamma_f, p.g_scale);
  c.family = "frozen";
  c.drift = [a = p.a](const Vec& x, const EmpiricalMeasure&) -> Vec { return -a * x; };
  c.measure_dependent = false;
  return c;
}

CoefficientSet make_polynomial_drift(int dim, const PolynomialDriftParams& p) {
  CoefficientSet c = linear_jumps(dim, p.beta, p.gamma_f, p.g_scale);
  c.family = "polynomial_drift";
  c.drift = [a1 = p.a1, a3 = p.a3](const Vec& x, const EmpiricalMeasure&) -> Vec {
    return (a1 + a3 * x.squaredNorm()) * x;
  };
  c.measure_dependent = false;
  return c;
}

CommonCoefficients make_linear_common(double f0_scale, double g0_scale) {
  CommonCoefficients cc;
  cc.small_jump = [f0_scale](const Vec&, const EmpiricalMeasure&, const Vec& z) -> Vec {
    return f0_scale * z;
  };
  cc.small_jump_scale = [f0_scale](const Vec&, const EmpiricalMeasure&) { return f0_scale; };
  cc.big_jump = [g0_scale](const Vec&, const EmpiricalMeasure&, const Vec& z) -> Vec {
    return g0_scale * z;
  };
  return cc;
}

void register_family(const std::string& name, FamilyFactory factory) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  reg.factories[name] = std::move(factory);
}

bool has_family(const std::string& name) {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  return reg.factories.count(name) > 0;
}

std::vector<std::string> family_names() {
  auto& reg = registry();
  std::lock_guard lock(reg.mutex);
  std::vector<std::string> out;
  for (const auto& [name, _] : reg.factories) out.push_back(name);
  return out;
}

CoefficientSet make_family(const std::string& name, int dim, const nlohmann::json& params) {
  FamilyFactory factory;
  {
    auto& reg = registry();
    std::lock_guard lock(reg.mutex);
    auto it = reg.factories.find(name);
    if (it == reg.factories.end()) throw ConfigError("unknown coefficient family '" + name + "'");
    factory = it->second;
  }
  CoefficientSet c = factory(dim, params);
  if (c.family.empty()) c.family = name;
  c.validate();
  return c;
}

}  // namespace mvlab
