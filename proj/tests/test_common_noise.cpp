#include <doctest.h>

#include "mvlab/common_noise.hpp"

#include <cmath>

using namespace mvlab;

namespace {

LevyModel big_only(double rate) {
  LevyModel m = LevyModel::zero(1, 1.0);
  m.big.rate = rate;
  m.big.sampler = MarkSampler::annulus(1, 1.5, 2.0);
  return m;
}

LevyModel both_bands() {
  LevyModel m = big_only(1.0);
  m.small.rate = 2.0;
  m.small.sampler = MarkSampler::annulus(1, 0.1, 0.5);
  return m;
}

CoefficientSet linear_with_common(double f0, double g0) {
  LinearMeanfieldParams lp;
  lp.gamma_f = 0.2;
  lp.g_scale = 0.3;
  auto c = make_linear_meanfield(1, lp);
  c.common = make_linear_common(f0, g0);
  return c;
}

SolverConfig cfg() {
  SolverConfig c;
  c.step = 0.02;
  c.paths = 16;
  c.tolerance = 1e-3;
  c.compensator_marks = 64;
  return c;
}

const NoiseStream kBase{4, {6, 0, 0, Layer::kInitial}};

}  // namespace

TEST_CASE("zero-rate common layer reproduces the one-layer system") {
  const auto c = linear_with_common(0.5, 0.5);
  const auto idio = both_bands();
  const auto zero = LevyModel::zero(1);
  const auto grid = TimeGrid::uniform(1.0, 0.02);
  TwoLayerNoise with{&idio, &zero, kBase, common_path_stream(4, 6, 0)};
  TwoLayerNoise without{&idio, nullptr, kBase, {}};
  const auto a = simulate_common_system(c, 8, with, InitialLaw::uniform_box(1, -1, 1), grid, cfg());
  const auto b = simulate_common_system(c, 8, without, InitialLaw::uniform_box(1, -1, 1), grid, cfg());
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a.paths[i].times == b.paths[i].times);
    CHECK(a.paths[i].states == b.paths[i].states);
  }
  CHECK(a.common_jumps.empty());
}

TEST_CASE("zero-rate common layer: conditional fixed point equals the fixed point") {
  const auto c = linear_with_common(0.5, 0.5);
  const auto idio = both_bands();
  const auto zero = LevyModel::zero(1);
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  const auto plain = picard_fixed_point(c, idio, InitialLaw::uniform_box(1, -1, 1), grid, cfg(), kBase);
  const auto cond = conditional_picard(c, idio, &zero, InitialLaw::uniform_box(1, -1, 1), grid, cfg(), kBase,
                                       {1, 4, 6});
  REQUIRE(cond.flows.size() == 1);
  CHECK(cond.iterations == plain.iterations);
  for (std::size_t k = 0; k < grid.base.size(); ++k) {
    CHECK(cond.flows[0].at_index(k).points() == plain.flow.at_index(k).points());
  }
  for (std::size_t k = 0; k < plain.trace.size(); ++k) {
    CHECK(cond.trace[k] == doctest::Approx(plain.trace[k]).epsilon(1e-12));
  }
}

TEST_CASE("zero-rate common layer: conditional PoC equals weak PoC") {
  const auto c = linear_with_common(0.5, 0.5);
  const auto idio = both_bands();
  const auto zero = LevyModel::zero(1);
  PoCConfig pc;
  pc.n_grid = {4, 8, 16};
  pc.replications = 4;
  pc.horizon = 0.5;
  pc.step = 0.05;
  pc.solver = cfg();
  const auto weak = run_weak_poc(c, idio, InitialLaw::uniform_box(1, -1, 1), pc);
  const auto cond = run_conditional_poc(c, idio, zero, InitialLaw::uniform_box(1, -1, 1), pc, 2);
  for (std::size_t a = 0; a < weak.points.size(); ++a) {
    CHECK(weak.points[a].estimate == cond.points[a].estimate);
    CHECK(weak.points[a].std_error == cond.points[a].std_error);
  }
  CHECK(cond.experiment == "conditional-poc");
}

TEST_CASE("without idiosyncratic noise every particle sees the same common jumps") {
  const auto c = linear_with_common(0.0, 1.0);
  const auto idio = LevyModel::zero(1);
  const auto common = big_only(3.0);
  const auto grid = TimeGrid::uniform(2.0, 0.05);
  TwoLayerNoise noise{&idio, &common, kBase, common_path_stream(4, 6, 3)};
  const auto sys = simulate_common_system(c, 5, noise, InitialLaw::uniform_box(1, -1, 1), grid, cfg());
  REQUIRE_FALSE(sys.common_jumps.empty());
  for (const auto& path : sys.paths) {
    REQUIRE(path.jumps.size() == sys.common_jumps.size());
    for (std::size_t j = 0; j < path.jumps.size(); ++j) {
      CHECK(path.jumps[j].common);
      CHECK(path.jumps[j].time == sys.common_jumps[j].time);
      CHECK(path.jumps[j].mark == sys.common_jumps[j].mark);
      CHECK(path.jumps[j].increment == path.jumps[j].mark);  // g0 = z
    }
  }
}

TEST_CASE("common jumps correlate particles") {
  // dX = -X dt + dZ + dZ0 with independent compound Poisson Z, Z0 of the same
  // law and X_0 = 0: corr(X^1_T, X^2_T) = 1/2.
  FrozenParams fp;
  fp.g_scale = 1.0;
  auto c = make_frozen(1, fp);
  c.common = make_linear_common(0.0, 1.0);
  const auto idio = big_only(2.0);
  const auto common = big_only(2.0);
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  const std::size_t reps = 800;
  std::vector<double> a(reps), b(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    TwoLayerNoise noise{&idio, &common, NoiseStream{8, {9, static_cast<std::uint32_t>(r), 0, Layer::kInitial}},
                        common_path_stream(8, 9, r)};
    const auto sys = simulate_common_system(c, 2, noise, InitialLaw::point(Vec::Zero(1)), grid, cfg(), false);
    const auto& pts = sys.flow.clouds().back().points();
    a[r] = pts(0, 0);
    b[r] = pts(0, 1);
  }
  double ma = 0, mb = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    ma += a[r];
    mb += b[r];
  }
  ma /= reps;
  mb /= reps;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    sab += (a[r] - ma) * (b[r] - mb);
    saa += (a[r] - ma) * (a[r] - ma);
    sbb += (b[r] - mb) * (b[r] - mb);
  }
  const double corr = sab / std::sqrt(saa * sbb);
  // SE of the sample correlation ~ (1 - rho^2)/sqrt(reps) ~ 0.027.
  CHECK(corr == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("conditional flows differ across common paths and satisfy the tower property") {
  const auto c = linear_with_common(0.0, 1.0);
  const auto idio = both_bands();
  const auto common = big_only(3.0);
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  const auto res = conditional_picard(c, idio, &common, InitialLaw::uniform_box(1, -1, 1), grid, cfg(),
                                      kBase, {8, 4, 6});
  CHECK(res.flows.size() == 8);
  const auto clouds = conditional_clouds(res, grid.base.size() - 1);
  double lo = 1e300, hi = -1e300, avg = 0.0;
  for (const auto& cc : clouds) {
    lo = std::min(lo, cc.cloud.mean()[0]);
    hi = std::max(hi, cc.cloud.mean()[0]);
    avg += cc.cloud.mean()[0];
  }
  avg /= static_cast<double>(clouds.size());
  CHECK(hi - lo > 0.1);
  double pooled = 0.0;
  std::size_t count = 0;
  for (const auto& cc : clouds) {
    for (Eigen::Index j = 0; j < cc.cloud.points().cols(); ++j) {
      pooled += cc.cloud.points()(0, j);
      ++count;
    }
  }
  CHECK(std::abs(pooled / static_cast<double>(count) - avg) < 1e-9);
  // At t = 0 the conditional laws coincide.
  const auto start = conditional_clouds(res, 0);
  for (const auto& cc : start) CHECK(cc.cloud.points() == start[0].cloud.points());
}

TEST_CASE("common layer rejects measure-dependent f") {
  CubicInteractionParams p;
  auto c = make_cubic_interaction(1, p);
  c.common = make_linear_common(0.1, 0.1);
  const auto idio = both_bands();
  const auto common = big_only(1.0);
  TwoLayerNoise noise{&idio, &common, kBase, common_path_stream(4, 6, 0)};
  CHECK_THROWS_AS(simulate_common_system(c, 3, noise, InitialLaw::uniform_box(1, -1, 1),
                                         TimeGrid::uniform(1.0, 0.1), cfg()),
                  ConfigError);
}
