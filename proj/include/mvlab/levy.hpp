#pragma once

#include "mvlab/rng.hpp"
#include "mvlab/types.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace mvlab {

// U: compensated small-jump band. V: finite-intensity big-jump band.
enum class Band { kSmall, kBig };

// Normalized mark law of one band. Built-in laws are rotation invariant:
// a radius drawn from a radial law times a uniform direction.
class MarkSampler {
 public:
  enum class Family { kAnnulus, kExponential, kCustom };

  // Uniform on {inner < |z| <= outer} (the sphere |z| = inner when equal).
  static MarkSampler annulus(int dim, double inner, double outer);
  // |z| = inner + E with E ~ Exp(decay) conditioned on |z| <= outer.
  static MarkSampler exponential(int dim, double inner, double decay,
                                 double outer = std::numeric_limits<double>::infinity());
  // User-registered law. The support bounds are used only for band checks;
  // mean is the first moment of the normalized law.
  static MarkSampler custom(int dim, std::function<Vec(RandomStream&)> draw, double min_norm,
                            double max_norm, Vec mean);

  Vec sample(RandomStream& rng) const;

  Family family() const { return family_; }
  int dim() const { return dim_; }
  double min_norm() const { return inner_; }
  double max_norm() const { return outer_; }
  double decay() const { return decay_; }
  bool is_radial() const { return family_ != Family::kCustom; }

  // Radial CDF / quantile of |z|; built-in families only.
  double radial_cdf(double r) const;
  double radial_quantile(double u) const;
  // E g(|z|) under the normalized law, by quadrature over the radial quantile
  // (exact closed forms for g = r^2).
  double radial_expectation(const std::function<double(double)>& g) const;
  double second_moment() const;
  Vec mean() const;

 private:
  MarkSampler() = default;

  Family family_ = Family::kAnnulus;
  int dim_ = 1;
  double inner_ = 0.0;
  double outer_ = 0.0;
  double decay_ = 0.0;
  std::function<Vec(RandomStream&)> draw_;
  Vec mean_;
};

enum class SmallMode { kFiniteActivity, kTruncated };

struct SmallBand {
  SmallMode mode = SmallMode::kFiniteActivity;
  double rate = 0.0;  // lambda_U per unit time
  std::optional<MarkSampler> sampler;
  // Truncated mode only: marks with |z| <= epsilon are dropped.
  std::optional<double> epsilon;
  std::string bias_note;
};

struct BigBand {
  double rate = 0.0;  // lambda_V = nu(1_V)
  std::optional<MarkSampler> sampler;
};

struct LevyModel {
  int dim = 1;
  double split_radius = 1.0;
  SmallBand small;
  BigBand big;

  // Throws ConfigError listing every violated invariant.
  void validate() const;
  std::vector<std::string> violations() const;

  double rate(Band band) const { return band == Band::kSmall ? small.rate : big.rate; }
  const MarkSampler* sampler(Band band) const;

  // m_U = int_U z nu(dz).
  Vec small_mean() const;
  // nu(|z|^2 1_U).
  double small_second_moment() const;
  // nu((1 v |z|^beta) 1_V).
  double beta_moment_big(double beta) const;

  static LevyModel zero(int dim, double split_radius = 1.0);
};

struct JumpEvent {
  double time = 0.0;
  Vec mark;
  Band band = Band::kBig;
};

// Lazily generates a homogeneous marked Poisson process on (start, end] from
// one substream: a gap draw, then per event its mark followed by the next gap.
class PoissonCursor {
 public:
  PoissonCursor(RandomStream rng, double rate, const MarkSampler* sampler, double start,
                double end, Band band);

  bool done() const { return next_time_ > end_; }
  double peek_time() const { return next_time_; }
  JumpEvent pop();

 private:
  RandomStream rng_;
  double rate_;
  const MarkSampler* sampler_;
  double end_;
  Band band_;
  double next_time_;
};

std::vector<JumpEvent> sample_big_jumps(const NoiseStream& stream, double horizon,
                                        const LevyModel& model);

struct SmallJumpSample {
  std::vector<JumpEvent> events;
  Vec compensator;  // (t1 - t0) * m_U
};

SmallJumpSample sample_small_jumps(const NoiseStream& stream, double t0, double t1,
                                   const LevyModel& model);

struct NuEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = false;
  std::size_t samples = 0;
};

struct NuOptions {
  std::size_t samples = 1'000'000;
  NoiseStream stream{0x6e75ull, {kMaxExperimentId, 0, 0, Layer::kAuxiliary}};
};

// lambda_band * E[integrand(Z)] by Monte Carlo over the band's mark law.
NuEstimate nu_expectation(const LevyModel& model, Band band,
                          const std::function<double(const Vec&)>& integrand,
                          const NuOptions& options = {});
// Radial integrand g(|z|): evaluated by quadrature (exact for built-in laws).
NuEstimate nu_expectation_radial(const LevyModel& model, Band band,
                                 const std::function<double(double)>& g);

}  // namespace mvlab
