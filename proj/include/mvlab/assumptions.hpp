#pragma once

#include "mvlab/coefficients.hpp"
#include "mvlab/levy.hpp"
#include "mvlab/measure.hpp"
#include "mvlab/rng.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace mvlab {

enum class AssumptionId { kA1, kA1Prime, kA2, kA21, kA3, kB1, kB2 };

const char* assumption_name(AssumptionId id);

// One sampled argument (x, y, mu1, mu2). Single-point checks ignore y, mu2.
struct AssumptionTuple {
  Vec x;
  Vec y;
  EmpiricalMeasure mu1;
  EmpiricalMeasure mu2;
};

using TupleSampler = std::function<AssumptionTuple(RandomStream& rng, std::size_t trial)>;

struct BoxSamplerOptions {
  int dim = 1;
  double radius = 10.0;        // x, y uniform in [-radius, radius]^d
  std::size_t cloud_size = 8;  // mu1, mu2 have equal size
  double cloud_radius = 5.0;
  // Trials 0 .. 3*ray_radii.size()-1 are adversarial: x = R e1 paired with
  // y = -x, y = x - e1, and y = x with distinct clouds.
  std::vector<double> ray_radii{10.0, 100.0, 1000.0};
};

TupleSampler make_box_sampler(const BoxSamplerOptions& options);

struct CheckOptions {
  double declared = 1.0;
  std::size_t trials = 10000;
  double tolerance = 1e-9;
  std::uint64_t seed = 1;
  // Order of the measure distance in the (A1') form; 0 means beta.
  double p = 0.0;
  const LevyModel* common_levy = nullptr;  // nu^0 for the (B*) forms
  std::size_t quadrature_marks = 4096;
  std::size_t jump_marks = 4;  // z per trial for the big-jump condition
  int jobs = 1;
};

struct AssumptionReport {
  AssumptionId id = AssumptionId::kA1;
  std::size_t trials = 0;
  double worst_ratio = -std::numeric_limits<double>::infinity();
  // Lipschitz ratio of g (and g0) over sampled marks; one-sided forms only.
  double worst_jump_ratio = 0.0;
  AssumptionTuple witness;
  std::size_t witness_trial = 0;
  double declared = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// (A1), (A1') or (B1): 2<b(x,mu1)-b(y,mu2), x-y> + nu(|f(x,.)-f(y,.)|^2 1_U)
// [+ nu0 term] against L(|x-y|^2 + W_beta^2), L(|x-y| + W_p)|x-y| or
// K(|x-y|)(|x-y| + W_beta), plus the matching Lipschitz condition on g.
AssumptionReport check_one_sided_lipschitz(const CoefficientSet& coeffs, const LevyModel& levy,
                                           const TupleSampler& sampler,
                                           const CheckOptions& options,
                                           AssumptionId form = AssumptionId::kA1);

// (A2): 2<x,b> + nu(|f|^2 1_U) <= L(1 + |x|^2 + mu(|.|^beta)^(2/beta));
// (A21): <x,b> v nu(|f|^2 1_U) against the same right side;
// (B2): 2<x,b> + nu(|f|^2 1_U) + nu0(|f0|^2 1_U) <= K(1 + |x|^2 + |x| mu(|.|^beta)^(1/beta)).
AssumptionReport check_coercivity(const CoefficientSet& coeffs, const LevyModel& levy,
                                  const TupleSampler& sampler, const CheckOptions& options,
                                  AssumptionId form = AssumptionId::kA2);

// (A3) along a produced flow: int_0^T (sup_{|x|<=R} |b(x,mu_t)| +
// int_U sup_{|x|<=R} |f(x,mu_t,z)|^2 nu(dz)) dt, with the suprema taken over
// `trials` points of the ball plus +-R e_i. worst_ratio holds the integral;
// pass iff it is finite and <= declared.
AssumptionReport check_local_boundedness(const CoefficientSet& coeffs, const LevyModel& levy,
                                         const MeasureFlow& flow, double radius,
                                         const CheckOptions& options);

}  // namespace mvlab
