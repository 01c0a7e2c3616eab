#pragma once

#include "mvlab/levy.hpp"
#include "mvlab/measure.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mvlab {

using DriftFn = std::function<Vec(const Vec& x, const EmpiricalMeasure& mu)>;
using JumpFn = std::function<Vec(const Vec& x, const EmpiricalMeasure& mu, const Vec& z)>;
using ScaleFn = std::function<double(const Vec& x, const EmpiricalMeasure& mu)>;

// Jump coefficients (f0, g0) driven by the common noise layer. f0 never sees
// the measure; it receives an empty placeholder.
struct CommonCoefficients {
  JumpFn small_jump;
  JumpFn big_jump;
  ScaleFn small_jump_scale;  // optional: f0(x, z) = scale(x) * z
};

// The triple (b, f, g) of a McKean-Vlasov equation with declared beta.
struct CoefficientSet {
  std::string family;
  int dim = 1;
  double beta = 2.0;
  DriftFn drift;
  JumpFn small_jump;
  JumpFn big_jump;
  // Optional structure f(x, mu, z) = scale(x, mu) * z. When present the
  // compensator and nu-integrals of f use closed forms.
  ScaleFn small_jump_scale;
  // False when none of b, f, g reads the measure.
  bool measure_dependent = true;
  bool small_jump_uses_measure = true;
  std::optional<CommonCoefficients> common;

  void validate() const;
};

// Deterministic mark sample used when f has no registered closed form.
struct MarkQuadrature {
  std::vector<Vec> marks;
  double rate = 0.0;

  static MarkQuadrature build(const LevyModel& levy, Band band, std::size_t count,
                              std::uint64_t seed = 0x636f6d70ull);
};

// int_U f(x, mu, z) nu(dz)
Vec small_jump_compensator(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                           const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu);

// nu(|f(x, mu1, .) - f(y, mu2, .)|^2 1_U)
double small_jump_square_gap(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                             const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu1,
                             const Vec& y, const EmpiricalMeasure& mu2);

struct CubicInteractionParams {
  double c1 = 1.0, c2 = 1.0, c3 = 0.1, c4 = 1.0;
  Kernel kernel = Kernel::linear(1.0);
  double beta = 2.0;
  // f = C3 z (1 + C4|x|^2 + interaction) when true, C3 z (1 + C4|x|^2) otherwise.
  bool small_jump_uses_measure = true;
};

// b = C1 x - C2 x|x|^2 + I(x) 1, f = C3 z (1 + C4 |x|^2 [+ I(x)]),
// g = (1 + z)(1 + |x| + I(x)), with I(x) = mu(|h(x - .)|^beta)^(1/beta).
CoefficientSet make_cubic_interaction(int dim, const CubicInteractionParams& p);
// nu(|.|^2 1_U) threshold: C2 must exceed 12 C3^2 C4^2 nu(|.|^2 1_U).
double cubic_c2_threshold(const CubicInteractionParams& p, const LevyModel& levy);

struct LinearMeanfieldParams {
  double a = 1.0, c = 0.5, gamma_f = 0.0, g_scale = 0.0, beta = 2.0;
};
// b = -a x + c mean(mu), f = gamma_f z, g = g_scale z.
CoefficientSet make_linear_meanfield(int dim, const LinearMeanfieldParams& p);

struct FrozenParams {
  double a = 1.0, gamma_f = 0.0, g_scale = 0.0, beta = 2.0;
};
// Measure-independent: b = -a x, f = gamma_f z, g = g_scale z.
CoefficientSet make_frozen(int dim, const FrozenParams& p);

struct PolynomialDriftParams {
  double a1 = 0.0, a3 = -1.0, gamma_f = 0.0, g_scale = 0.0, beta = 2.0;
};
// Measure-independent: b = a1 x + a3 x|x|^2, f = gamma_f z, g = g_scale z.
CoefficientSet make_polynomial_drift(int dim, const PolynomialDriftParams& p);

// Common pair f0 = s0 z, g0 = k0 z.
CommonCoefficients make_linear_common(double f0_scale, double g0_scale);

// Registration hook for coefficient families selectable by name.
using FamilyFactory = std::function<CoefficientSet(int dim, const nlohmann::json& params)>;
void register_family(const std::string& name, FamilyFactory factory);
bool has_family(const std::string& name);
std::vector<std::string> family_names();
CoefficientSet make_family(const std::string& name, int dim, const nlohmann::json& params);

}  // namespace mvlab
