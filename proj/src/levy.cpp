#include "mvlab/levy.hpp"

#include <cmath>
#include <sstream>

namespace mvlab {

namespace {

constexpr int kQuadratureIntervals = 20000;  // even, for Simpson

double simpson(const std::function<double(double)>& fn, double lo, double hi) {
  const double step = (hi - lo) / kQuadratureIntervals;
  KahanSum acc;
  acc.add(fn(lo));
  acc.add(fn(hi));
  for (int i = 1; i < kQuadratureIntervals; ++i) {
    acc.add((i % 2 == 1 ? 4.0 : 2.0) * fn(lo + i * step));
  }
  return acc.value() * step / 3.0;
}

Vec random_direction(int dim, RandomStream& rng) {
  Vec dir(dim);
  if (dim == 1) {
    dir(0) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    return dir;
  }
  for (;;) {
    for (int k = 0; k < dim; ++k) dir(k) = rng.normal();
    const double norm = dir.norm();
    if (norm > 0.0) return dir / norm;
  }
}

}  // namespace

MarkSampler MarkSampler::annulus(int dim, double inner, double outer) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("annulus sampler: dimension out of range");
  if (!(inner >= 0.0) || !(outer >= inner) || !std::isfinite(outer)) {
    throw ConfigError("annulus sampler: require 0 <= inner <= outer < inf");
  }
  if (outer == 0.0) throw ConfigError("annulus sampler: outer radius must be positive");
  MarkSampler s;
  s.family_ = Family::kAnnulus;
  s.dim_ = dim;
  s.inner_ = inner;
  s.outer_ = outer;
  s.mean_ = Vec::Zero(dim);
  return s;
}

MarkSampler MarkSampler::exponential(int dim, double inner, double decay, double outer) {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("exponential sampler: dimension out of range");
  if (!(inner >= 0.0) || !std::isfinite(inner)) {
    throw ConfigError("exponential sampler: inner radius must be finite and >= 0");
  }
  if (!(decay > 0.0) || !std::isfinite(decay)) {
    throw ConfigError("exponential sampler: decay rate must be positive");
  }
  if (!(outer > inner)) throw ConfigError("exponential sampler: outer radius must exceed inner");
  MarkSampler s;
  s.family_ = Family::kExponential;
  s.dim_ = dim;
  s.inner_ = inner;
  s.outer_ = outer;
  s.decay_ = decay;
  s.mean_ = Vec::Zero(dim);
  return s;
}

MarkSampler MarkSampler::custom(int dim, std::function<Vec(RandomStream&)> draw, double min_norm,
                                double max_norm, Vec mean) {
  if (!draw) throw ConfigError("custom sampler: empty draw function");
  if (mean.size() != dim) throw ConfigError("custom sampler: mean has wrong dimension");
  MarkSampler s;
  s.family_ = Family::kCustom;
  s.dim_ = dim;
  s.inner_ = min_norm;
  s.outer_ = max_norm;
  s.draw_ = std::move(draw);
  s.mean_ = std::move(mean);
  return s;
}

double MarkSampler::radial_cdf(double r) const {
  switch (family_) {
    case Family::kAnnulus: {
      if (r < inner_) return 0.0;
      if (r >= outer_) return 1.0;
      const double d = dim_;
      return (std::pow(r, d) - std::pow(inner_, d)) / (std::pow(outer_, d) - std::pow(inner_, d));
    }
    case Family::kExponential: {
      if (r <= inner_) return 0.0;
      if (r >= outer_) return 1.0;
      const double mass = -std::expm1(-decay_ * (outer_ - inner_));
      return -std::expm1(-decay_ * (r - inner_)) / mass;
    }
    case Family::kCustom:
      break;
  }
  throw DomainError("radial_cdf is not available for custom mark samplers");
}

double MarkSampler::radial_quantile(double u) const {
  switch (family_) {
    case Family::kAnnulus: {
      if (outer_ == inner_) return inner_;
      const double d = dim_;
      const double a = std::pow(inner_, d);
      return std::pow(a + u * (std::pow(outer_, d) - a), 1.0 / d);
    }
    case Family::kExponential: {
      const double mass = -std::expm1(-decay_ * (outer_ - inner_));
      return inner_ - std::log1p(-u * mass) / decay_;
    }
    case Family::kCustom:
      break;
  }
  throw DomainError("radial_quantile is not available for custom mark samplers");
}

Vec MarkSampler::sample(RandomStream& rng) const {
  if (family_ == Family::kCustom) return draw_(rng);
  const double radius = radial_quantile(rng.uniform());
  return radius * random_direction(dim_, rng);
}

double MarkSampler::radial_expectation(const std::function<double(double)>& g) const {
  switch (family_) {
    case Family::kAnnulus: {
      if (outer_ == inner_) return g(inner_);
      const double d = dim_;
      const double norm = std::pow(outer_, d) - std::pow(inner_, d);
      return simpson([&](double r) { return g(r) * d * std::pow(r, d - 1.0) / norm; }, inner_,
                     outer_);
    }
    case Family::kExponential: {
      const double span = std::min(outer_ - inner_, 60.0 / decay_);
      const double mass = -std::expm1(-decay_ * (outer_ - inner_));
      return simpson([&](double s) { return g(inner_ + s) * decay_ * std::exp(-decay_ * s) / mass; },
                     0.0, span);
    }
    case Family::kCustom:
      break;
  }
  throw DomainError("radial expectation is not available for custom mark samplers");
}

double MarkSampler::second_moment() const {
  switch (family_) {
    case Family::kAnnulus: {
      if (outer_ == inner_) return inner_ * inner_;
      const double d = dim_;
      return d / (d + 2.0) * (std::pow(outer_, d + 2.0) - std::pow(inner_, d + 2.0)) /
             (std::pow(outer_, d) - std::pow(inner_, d));
    }
    case Family::kExponential: {
      // R = a + E, E ~ Exp(k) conditioned on E <= c.
      const double a = inner_;
      const double k = decay_;
      double m1 = 1.0 / k;
      double m2 = 2.0 / (k * k);
      if (std::isfinite(outer_)) {
        const double c = outer_ - a;
        const double tail = std::exp(-k * c);
        const double mass = -std::expm1(-k * c);
        m1 = 1.0 / k - c * tail / mass;
        m2 = 2.0 / (k * k) - (c * c + 2.0 * c / k) * tail / mass;
      }
      return a * a + 2.0 * a * m1 + m2;
    }
    case Family::kCustom:
      break;
  }
  throw DomainError("closed-form second moment is not available for custom mark samplers");
}

Vec MarkSampler::mean() const { return mean_; }

const MarkSampler* LevyModel::sampler(Band band) const {
  const auto& s = band == Band::kSmall ? small.sampler : big.sampler;
  return s ? &*s : nullptr;
}

std::vector<std::string> LevyModel::violations() const {
  std::vector<std::string> out;
  if (dim < 1 || dim > kMaxDim) out.push_back("levy: dimension must be in [1, 8]");
  if (!(split_radius > 0.0) || !std::isfinite(split_radius)) {
    out.push_back("levy: split_radius must be positive and finite");
  }
  if (!(small.rate >= 0.0) || !std::isfinite(small.rate)) {
    out.push_back("levy: small-band rate must be finite and >= 0");
  }
  if (!(big.rate >= 0.0) || !std::isfinite(big.rate)) {
    out.push_back("levy: big-band rate must be finite and >= 0");
  }
  if (small.mode == SmallMode::kTruncated) {
    if (!small.epsilon) {
      out.push_back("levy: truncated small band requires a declared epsilon");
    } else if (!(*small.epsilon > 0.0)) {
      out.push_back("levy: truncated small band requires epsilon > 0");
    }
  }
  if (small.rate > 0.0) {
    if (!small.sampler) {
      out.push_back("levy: small band has positive rate but no mark sampler");
    } else {
      const auto& s = *small.sampler;
      if (s.dim() != dim) out.push_back("levy: small-band sampler dimension mismatch");
      if (s.max_norm() > split_radius) {
        out.push_back("levy: small-band marks must satisfy |z| <= split_radius");
      }
      if (s.min_norm() == 0.0 && s.max_norm() == 0.0) {
        out.push_back("levy: small band must not contain the origin");
      }
      if (small.mode == SmallMode::kTruncated && small.epsilon && s.min_norm() < *small.epsilon) {
        out.push_back("levy: truncated small-band sampler reaches below epsilon");
      }
    }
  }
  if (big.rate > 0.0) {
    if (!big.sampler) {
      out.push_back("levy: big band has positive rate but no mark sampler");
    } else {
      const auto& s = *big.sampler;
      if (s.dim() != dim) out.push_back("levy: big-band sampler dimension mismatch");
      if (s.min_norm() < split_radius) {
        out.push_back("levy: big-band marks must satisfy |z| > split_radius");
      }
      if (s.family() == MarkSampler::Family::kAnnulus && s.min_norm() == s.max_norm() &&
          s.min_norm() <= split_radius) {
        out.push_back("levy: big-band sphere must lie strictly outside split_radius");
      }
    }
  }
  return out;
}

void LevyModel::validate() const {
  auto v = violations();
  if (!v.empty()) {
    std::ostringstream msg;
    msg << "invalid Levy model:";
    for (const auto& s : v) msg << "\n  - " << s;
    throw ConfigError(msg.str(), std::move(v));
  }
}

Vec LevyModel::small_mean() const {
  if (small.rate == 0.0 || !small.sampler) return Vec::Zero(dim);
  return small.rate * small.sampler->mean();
}

double LevyModel::small_second_moment() const {
  if (small.rate == 0.0 || !small.sampler) return 0.0;
  return small.rate * small.sampler->second_moment();
}

double LevyModel::beta_moment_big(double beta) const {
  if (big.rate == 0.0 || !big.sampler) return 0.0;
  return big.rate *
         big.sampler->radial_expectation([beta](double r) { return std::max(1.0, std::pow(r, beta)); });
}

LevyModel LevyModel::zero(int dim, double split_radius) {
  LevyModel m;
  m.dim = dim;
  m.split_radius = split_radius;
  return m;
}

PoissonCursor::PoissonCursor(RandomStream rng, double rate, const MarkSampler* sampler,
                             double start, double end, Band band)
    : rng_(std::move(rng)), rate_(rate), sampler_(sampler), end_(end), band_(band) {
  if (!std::isfinite(rate)) throw ConfigError("Poisson intensity must be finite");
  if (rate > 0.0 && sampler == nullptr) throw ConfigError("positive intensity without mark sampler");
  next_time_ = rate > 0.0 ? start + rng_.exponential(rate_)
                          : std::numeric_limits<double>::infinity();
}

JumpEvent PoissonCursor::pop() {
  JumpEvent ev;
  ev.time = next_time_;
  ev.band = band_;
  ev.mark = sampler_->sample(rng_);
  next_time_ += rng_.exponential(rate_);
  return ev;
}

std::vector<JumpEvent> sample_big_jumps(const NoiseStream& stream, double horizon,
                                        const LevyModel& model) {
  if (!(horizon > 0.0)) throw DomainError("sample_big_jumps: horizon must be positive");
  if (!std::isfinite(model.big.rate)) throw ConfigError("sample_big_jumps: non-finite lambda_V");
  PoissonCursor cursor(stream.open(), model.big.rate, model.sampler(Band::kBig), 0.0, horizon,
                       Band::kBig);
  std::vector<JumpEvent> out;
  while (!cursor.done()) out.push_back(cursor.pop());
  return out;
}

SmallJumpSample sample_small_jumps(const NoiseStream& stream, double t0, double t1,
                                   const LevyModel& model) {
  if (!(t1 > t0)) throw DomainError("sample_small_jumps: require t1 > t0");
  if (model.small.mode == SmallMode::kTruncated && !model.small.epsilon) {
    throw ConfigError("sample_small_jumps: truncated mode without declared epsilon");
  }
  PoissonCursor cursor(stream.open(), model.small.rate, model.sampler(Band::kSmall), t0, t1,
                       Band::kSmall);
  SmallJumpSample out;
  while (!cursor.done()) out.events.push_back(cursor.pop());
  out.compensator = (t1 - t0) * model.small_mean();
  return out;
}

NuEstimate nu_expectation(const LevyModel& model, Band band,
                          const std::function<double(const Vec&)>& integrand,
                          const NuOptions& options) {
  const double rate = model.rate(band);
  NuEstimate est;
  if (rate == 0.0) {
    est.exact = true;
    return est;
  }
  const MarkSampler* sampler = model.sampler(band);
  if (!sampler) throw ConfigError("nu_expectation: band has no mark sampler");
  if (options.samples < 2) throw DomainError("nu_expectation: need at least 2 samples");
  RandomStream rng = options.stream.open();
  KahanSum sum, sum_sq;
  for (std::size_t i = 0; i < options.samples; ++i) {
    const double v = integrand(sampler->sample(rng));
    sum.add(v);
    sum_sq.add(v * v);
  }
  const double n = static_cast<double>(options.samples);
  const double mean = sum.value() / n;
  const double var = std::max(0.0, (sum_sq.value() - n * mean * mean) / (n - 1.0));
  est.value = rate * mean;
  est.std_error = rate * std::sqrt(var / n);
  est.samples = options.samples;
  if (!std::isfinite(est.value) || !std::isfinite(est.std_error)) {
    throw Error(ErrorKind::kIntegrability, "nu_expectation: non-finite estimate");
  }
  return est;
}

NuEstimate nu_expectation_radial(const LevyModel& model, Band band,
                                 const std::function<double(double)>& g) {
  const double rate = model.rate(band);
  NuEstimate est;
  est.exact = true;
  if (rate == 0.0) return est;
  const MarkSampler* sampler = model.sampler(band);
  if (!sampler) throw ConfigError("nu_expectation: band has no mark sampler");
  est.value = rate * sampler->radial_expectation(g);
  if (!std::isfinite(est.value)) {
    throw Error(ErrorKind::kIntegrability, "nu_expectation: non-finite estimate");
  }
  return est;
}

}  // namespace mvlab
