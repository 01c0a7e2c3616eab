#include "mvlab/assumptions.hpp"

#include "mvlab/parallel.hpp"
#include "mvlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mvlab {

namespace {

Vec uniform_vec(RandomStream& rng, int dim, double radius) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = radius * (2.0 * rng.uniform() - 1.0);
  return v;
}

EmpiricalMeasure uniform_cloud(RandomStream& rng, int dim, std::size_t size, double radius) {
  std::vector<Vec> pts;
  pts.reserve(size);
  for (std::size_t i = 0; i < size; ++i) pts.push_back(uniform_vec(rng, dim, radius));
  return EmpiricalMeasure::from_points(pts);
}

double exact_w(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  return w_p_exact(a, b, p).distance;
}

// nu(|f(x, mu, .)|^2 1_U)
double small_square(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                    const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu) {
  if (levy.small.rate == 0.0 || !f) return 0.0;
  if (scale) {
    const double s = scale(x, mu);
    return s * s * levy.small_second_moment();
  }
  KahanSum acc;
  for (const auto& z : quad.marks) acc.add(f(x, mu, z).squaredNorm());
  return quad.rate * acc.value() / static_cast<double>(quad.marks.size());
}

double square_gap(const JumpFn& f, const ScaleFn& scale, const LevyModel& levy,
                  const MarkQuadrature& quad, const Vec& x, const EmpiricalMeasure& mu1,
                  const Vec& y, const EmpiricalMeasure& mu2) {
  if (levy.small.rate == 0.0 || !f) return 0.0;
  return small_jump_square_gap(f, scale, levy, quad, x, mu1, y, mu2);
}

MarkQuadrature quadrature_for(const LevyModel& levy, const JumpFn& f, const ScaleFn& scale,
                              const CheckOptions& options) {
  if (scale || !f || levy.small.rate == 0.0) return {};
  return MarkQuadrature::build(levy, Band::kSmall, options.quadrature_marks, options.seed);
}

// Marks for the g-condition: the origin plus draws from the V band (U band
// when V is empty).
std::vector<Vec> jump_marks(const LevyModel& levy, RandomStream& rng, std::size_t count) {
  std::vector<Vec> out;
  out.push_back(Vec::Zero(levy.dim));
  const MarkSampler* s = levy.big.rate > 0.0 ? levy.sampler(Band::kBig)
                                             : (levy.small.rate > 0.0 ? levy.sampler(Band::kSmall)
                                                                      : nullptr);
  if (!s) return out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(s->sample(rng));
  return out;
}

double ratio_of(double lhs, double rhs) {
  if (rhs > 0.0) return lhs / rhs;
  if (lhs > 0.0) return std::numeric_limits<double>::infinity();
  return -std::numeric_limits<double>::infinity();
}

struct TrialOutcome {
  double ratio = -std::numeric_limits<double>::infinity();
  double jump_ratio = 0.0;
  AssumptionTuple tuple;
};

AssumptionReport reduce(AssumptionId id, const CheckOptions& options,
                        std::vector<TrialOutcome>& outcomes) {
  AssumptionReport report;
  report.id = id;
  report.trials = outcomes.size();
  report.declared = options.declared;
  report.tolerance = options.tolerance;
  std::size_t best = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const double r = std::max(outcomes[i].ratio, outcomes[i].jump_ratio);
    const double cur = std::max(outcomes[best].ratio, outcomes[best].jump_ratio);
    if (r > cur || std::isnan(r)) best = i;
    report.worst_ratio = std::max(report.worst_ratio, outcomes[i].ratio);
    report.worst_jump_ratio = std::max(report.worst_jump_ratio, outcomes[i].jump_ratio);
    if (std::isnan(outcomes[i].ratio) || std::isnan(outcomes[i].jump_ratio)) {
      throw DomainError(std::string(assumption_name(id)) + ": non-finite coefficient value");
    }
  }
  if (!outcomes.empty()) {
    report.witness = std::move(outcomes[best].tuple);
    report.witness_trial = best;
  }
  const double limit = options.declared + options.tolerance * std::max(1.0, std::abs(options.declared));
  report.pass = report.worst_ratio <= limit && report.worst_jump_ratio <= limit;
  return report;
}

void check_trials(const CheckOptions& options) {
  if (options.trials == 0) throw ConfigError("assumption check: trials must be positive");
}

RandomStream trial_stream(const CheckOptions& options, std::size_t trial) {
  return RandomStream(options.seed, {0, static_cast<std::uint32_t>(trial), 0, Layer::kAuxiliary});
}

}  // namespace

const char* assumption_name(AssumptionId id) {
  switch (id) {
    case AssumptionId::kA1: return "A1";
    case AssumptionId::kA1Prime: return "A1'";
    case AssumptionId::kA2: return "A2";
    case AssumptionId::kA21: return "A21";
    case AssumptionId::kA3: return "A3";
    case AssumptionId::kB1: return "B1";
    case AssumptionId::kB2: return "B2";
  }
  return "?";
}

TupleSampler make_box_sampler(const BoxSamplerOptions& options) {
  if (options.dim < 1 || options.dim > kMaxDim) throw ConfigError("box sampler: bad dimension");
  if (options.cloud_size < 1) throw ConfigError("box sampler: cloud size must be >= 1");
  return [options](RandomStream& rng, std::size_t trial) {
    AssumptionTuple t;
    const int d = options.dim;
    t.mu1 = uniform_cloud(rng, d, options.cloud_size, options.cloud_radius);
    t.mu2 = uniform_cloud(rng, d, options.cloud_size, options.cloud_radius);
    const std::size_t rays = 3 * options.ray_radii.size();
    if (trial < rays) {
      const double r = options.ray_radii[trial / 3];
      Vec e = Vec::Zero(d);
      e[0] = 1.0;
      t.x = r * e;
      switch (trial % 3) {
        case 0: t.y = -t.x; break;
        case 1: t.y = t.x - e; break;
        default: t.y = t.x; break;
      }
      return t;
    }
    t.x = uniform_vec(rng, d, options.radius);
    t.y = uniform_vec(rng, d, options.radius);
    return t;
  };
}

AssumptionReport check_one_sided_lipschitz(const CoefficientSet& coeffs, const LevyModel& levy,
                                           const TupleSampler& sampler,
                                           const CheckOptions& options, AssumptionId form) {
  if (form != AssumptionId::kA1 && form != AssumptionId::kA1Prime && form != AssumptionId::kB1) {
    throw ConfigError("check_one_sided_lipschitz: form must be A1, A1' or B1");
  }
  check_trials(options);
  coeffs.validate();
  const double beta = coeffs.beta;
  const double order = form == AssumptionId::kA1Prime ? (options.p > 0.0 ? options.p : beta) : beta;
  const MarkQuadrature quad = quadrature_for(levy, coeffs.small_jump, coeffs.small_jump_scale, options);
  const CommonCoefficients* common = coeffs.common ? &*coeffs.common : nullptr;
  const LevyModel* common_levy = form == AssumptionId::kB1 ? options.common_levy : nullptr;
  MarkQuadrature quad0;
  if (common && common_levy) {
    quad0 = quadrature_for(*common_levy, common->small_jump, common->small_jump_scale, options);
  }
  const EmpiricalMeasure none;

  std::vector<TrialOutcome> outcomes(options.trials);
  parallel_for(options.trials, options.jobs, [&](std::size_t trial) {
    RandomStream rng = trial_stream(options, trial);
    TrialOutcome out;
    out.tuple = sampler(rng, trial);
    const auto& [x, y, mu1, mu2] = out.tuple;
    const double w = exact_w(mu1, mu2, order);
    const Vec dx = x - y;
    const double gap = dx.norm();
    double lhs = 2.0 * (coeffs.drift(x, mu1) - coeffs.drift(y, mu2)).dot(dx) +
                 square_gap(coeffs.small_jump, coeffs.small_jump_scale, levy, quad, x, mu1, y, mu2);
    if (common_levy && common) {
      lhs += square_gap(common->small_jump, common->small_jump_scale, *common_levy, quad0, x, none,
                        y, none);
    }
    double rhs = 0.0;
    switch (form) {
      case AssumptionId::kA1: rhs = gap * gap + w * w; break;
      default: rhs = (gap + w) * gap; break;
    }
    out.ratio = ratio_of(lhs, rhs);

    RandomStream mark_rng(options.seed, {1, static_cast<std::uint32_t>(trial), 0, Layer::kAuxiliary});
    for (const Vec& z : jump_marks(levy, mark_rng, options.jump_marks)) {
      double diff = 0.0;
      if (coeffs.big_jump) diff += (coeffs.big_jump(x, mu1, z) - coeffs.big_jump(y, mu2, z)).norm();
      if (common_levy && common && common->big_jump) {
        diff += (common->big_jump(x, mu1, z) - common->big_jump(y, mu2, z)).norm();
      }
      const double jr = (1.0 + z.norm()) * (gap + w);
      out.jump_ratio = std::max(out.jump_ratio, diff == 0.0 ? 0.0 : ratio_of(diff, jr));
    }
    outcomes[trial] = std::move(out);
  });
  return reduce(form, options, outcomes);
}

AssumptionReport check_coercivity(const CoefficientSet& coeffs, const LevyModel& levy,
                                  const TupleSampler& sampler, const CheckOptions& options,
                                  AssumptionId form) {
  if (form != AssumptionId::kA2 && form != AssumptionId::kA21 && form != AssumptionId::kB2) {
    throw ConfigError("check_coercivity: form must be A2, A21 or B2");
  }
  check_trials(options);
  coeffs.validate();
  const double beta = coeffs.beta;
  const MarkQuadrature quad = quadrature_for(levy, coeffs.small_jump, coeffs.small_jump_scale, options);
  const CommonCoefficients* common = coeffs.common ? &*coeffs.common : nullptr;
  const LevyModel* common_levy = form == AssumptionId::kB2 ? options.common_levy : nullptr;
  MarkQuadrature quad0;
  if (common && common_levy) {
    quad0 = quadrature_for(*common_levy, common->small_jump, common->small_jump_scale, options);
  }
  const EmpiricalMeasure none;

  std::vector<TrialOutcome> outcomes(options.trials);
  parallel_for(options.trials, options.jobs, [&](std::size_t trial) {
    RandomStream rng = trial_stream(options, trial);
    TrialOutcome out;
    out.tuple = sampler(rng, trial);
    const Vec& x = out.tuple.x;
    const EmpiricalMeasure& mu = out.tuple.mu1;
    const double inner = x.dot(coeffs.drift(x, mu));
    const double fsq = small_square(coeffs.small_jump, coeffs.small_jump_scale, levy, quad, x, mu);
    const double norm_mu = beta_norm(mu, beta);
    const double xx = x.squaredNorm();
    double lhs = 0.0, rhs = 0.0;
    switch (form) {
      case AssumptionId::kA2:
        lhs = 2.0 * inner + fsq;
        rhs = 1.0 + xx + norm_mu * norm_mu;
        break;
      case AssumptionId::kA21:
        lhs = std::max(inner, fsq);
        rhs = 1.0 + xx + norm_mu * norm_mu;
        break;
      default:
        lhs = 2.0 * inner + fsq;
        if (common_levy && common) {
          lhs += small_square(common->small_jump, common->small_jump_scale, *common_levy, quad0, x, none);
        }
        rhs = 1.0 + xx + std::sqrt(xx) * norm_mu;
        break;
    }
    out.ratio = ratio_of(lhs, rhs);
    outcomes[trial] = std::move(out);
  });
  return reduce(form, options, outcomes);
}

AssumptionReport check_local_boundedness(const CoefficientSet& coeffs, const LevyModel& levy,
                                         const MeasureFlow& flow, double radius,
                                         const CheckOptions& options) {
  check_trials(options);
  coeffs.validate();
  if (!(radius > 0.0)) throw ConfigError("check_local_boundedness: radius must be positive");
  if (flow.size() < 2) throw ConfigError("check_local_boundedness: flow needs two grid times");
  const int d = coeffs.dim;
  std::vector<Vec> ball;
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = radius;
    ball.push_back(e);
    ball.push_back(-e);
  }
  ball.push_back(Vec::Zero(d));
  RandomStream rng = trial_stream(options, 0);
  while (ball.size() < options.trials) {
    Vec v = uniform_vec(rng, d, radius);
    if (v.norm() <= radius) ball.push_back(v);
  }
  const MarkQuadrature quad = quadrature_for(levy, coeffs.small_jump, coeffs.small_jump_scale, options);

  const std::size_t points = flow.size();
  std::vector<double> integrand(points);
  parallel_for(points, options.jobs, [&](std::size_t k) {
    const EmpiricalMeasure& mu = flow.at_index(k);
    double sup_b = 0.0;
    for (const Vec& x : ball) sup_b = std::max(sup_b, coeffs.drift(x, mu).norm());
    double f_part = 0.0;
    if (levy.small.rate > 0.0 && coeffs.small_jump) {
      if (coeffs.small_jump_scale) {
        double sup_s = 0.0;
        for (const Vec& x : ball) sup_s = std::max(sup_s, std::abs(coeffs.small_jump_scale(x, mu)));
        f_part = sup_s * sup_s * levy.small_second_moment();
      } else {
        KahanSum acc;
        for (const Vec& z : quad.marks) {
          double s = 0.0;
          for (const Vec& x : ball) s = std::max(s, coeffs.small_jump(x, mu, z).squaredNorm());
          acc.add(s);
        }
        f_part = quad.rate * acc.value() / static_cast<double>(quad.marks.size());
      }
    }
    integrand[k] = sup_b + f_part;
  });
  KahanSum integral;
  const auto& grid = flow.grid();
  for (std::size_t k = 0; k + 1 < points; ++k) integral.add(integrand[k] * (grid[k + 1] - grid[k]));

  AssumptionReport report;
  report.id = AssumptionId::kA3;
  report.trials = ball.size();
  report.worst_ratio = integral.value();
  report.declared = options.declared;
  report.tolerance = options.tolerance;
  report.witness.x = Vec::Constant(d, radius);
  report.pass = std::isfinite(report.worst_ratio) &&
                report.worst_ratio <= options.declared * (1.0 + options.tolerance);
  return report;
}

}  // namespace mvlab
