#include <doctest.h>

#include "mvlab/solver.hpp"

#include <cmath>

using namespace mvlab;

namespace {

Vec v1(double a) {
  Vec v(1);
  v << a;
  return v;
}

const NoiseStream kBase{9, {1, 0, 0, Layer::kInitial}};

LevyModel jumpy(int dim) {
  LevyModel m = LevyModel::zero(dim, 1.0);
  m.small.rate = 3.0;
  m.small.sampler = MarkSampler::annulus(dim, 0.1, 0.5);
  m.big.rate = 2.0;
  m.big.sampler = MarkSampler::annulus(dim, 1.5, 2.0);
  return m;
}

SolverConfig cfg(double h) {
  SolverConfig c;
  c.step = h;
  c.paths = 16;
  c.compensator_marks = 64;
  return c;
}

MeasureFlow point_flow(const TimeGrid& grid, int dim) {
  return MeasureFlow::constant(grid.base, EmpiricalMeasure::dirac(Vec::Zero(dim)));
}

double ode_error(double h) {
  FrozenParams fp;
  const auto c = make_frozen(1, fp);
  const auto grid = TimeGrid::uniform(1.0, h);
  const auto path = integrate_decoupled(c, LevyModel::zero(1), point_flow(grid, 1), v1(1.0),
                                        {kBase, std::nullopt}, grid, cfg(h));
  return std::abs(path.terminal()[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("time grid") {
  const auto g = TimeGrid::uniform(1.0, 0.3);
  CHECK(g.base.size() == 5);
  CHECK(g.base.back() == 1.0);
  CHECK(g.steps() == 4);
  CHECK_THROWS_AS(TimeGrid::uniform(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(TimeGrid::uniform(-1.0, 0.1), DomainError);
}

TEST_CASE("zero coefficients keep the path constant") {
  FrozenParams fp;
  fp.a = 0.0;
  const auto c = make_frozen(2, fp);
  const auto grid = TimeGrid::uniform(1.0, 0.1);
  Vec x0(2);
  x0 << 1.5, -2.0;
  const auto path = integrate_decoupled(c, jumpy(2), point_flow(grid, 2), x0, {kBase, std::nullopt},
                                        grid, cfg(0.1));
  for (std::size_t k = 0; k < path.size(); ++k) CHECK(path.state(k) == x0);
}

TEST_CASE("Euler scheme for dx = -x dt") {
  CHECK(ode_error(1e-3) < 5e-3);
  // First-order convergence: halving h roughly halves the error.
  const double e1 = ode_error(0.02), e2 = ode_error(0.01), e3 = ode_error(0.005);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("forced big jump is applied at its time") {
  FrozenParams fp;
  fp.a = 0.0;
  fp.g_scale = 1.0;
  const auto c = make_frozen(1, fp);
  const auto grid = TimeGrid::uniform(1.0, 0.25);
  const std::vector<JumpEvent> jumps{{0.3, v1(2.0), Band::kBig}};
  const auto path = integrate_decoupled_forced(c, LevyModel::zero(1), point_flow(grid, 1), v1(1.0),
                                               {kBase, std::nullopt}, grid, cfg(0.25), jumps);
  REQUIRE(path.jumps.size() == 1);
  CHECK(path.jumps[0].time == 0.3);
  CHECK(path.jumps[0].increment[0] == 2.0);
  bool seen = false;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (path.times[k] == 0.3) {
      seen = true;
      CHECK(path.state(k)[0] == 3.0);
    }
    if (path.times[k] < 0.3) CHECK(path.state(k)[0] == 1.0);
  }
  CHECK(seen);
  CHECK(path.terminal()[0] == 3.0);
  const auto on_grid = states_on_grid(path, grid);
  CHECK(on_grid.size() == grid.base.size());
  CHECK(on_grid[1][0] == 1.0);
  CHECK(on_grid[2][0] == 3.0);
}

TEST_CASE("zero big-jump intensity reproduces the jump-free path") {
  LinearMeanfieldParams lp;
  lp.gamma_f = 0.0;
  lp.g_scale = 1.0;
  const auto c = make_linear_meanfield(1, lp);
  LevyModel l = LevyModel::zero(1);
  l.big.sampler = MarkSampler::annulus(1, 1.5, 2.0);
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  const auto flow = point_flow(grid, 1);
  const auto a = integrate_decoupled(c, l, flow, v1(0.7), {kBase, std::nullopt}, grid, cfg(0.05));
  const auto b = integrate_decoupled(c, LevyModel::zero(1), flow, v1(0.7), {kBase, std::nullopt},
                                     grid, cfg(0.05));
  CHECK(a.times == b.times);
  CHECK(a.states == b.states);
}

TEST_CASE("one particle interacts only with itself") {
  CubicInteractionParams p;
  const auto c = make_cubic_interaction(1, p);
  const auto levy = jumpy(1);
  const auto grid = TimeGrid::uniform(1.0, 0.01);
  const auto sys = simulate_particle_system(c, levy, 1, InitialLaw::uniform_box(1, -1, 1), grid, kBase,
                                            cfg(0.01));
  const auto x0 = draw_initial(InitialLaw::uniform_box(1, -1, 1), kBase, 1);
  const auto alone = integrate_decoupled(c, levy, sys.flow, x0[0], make_drivers(kBase, 1)[0], grid,
                                         cfg(0.01));
  CHECK(alone.times == sys.paths[0].times);
  CHECK(alone.states == sys.paths[0].states);
}

TEST_CASE("measure-free coefficients decouple the system") {
  FrozenParams fp;
  fp.gamma_f = 0.3;
  fp.g_scale = 0.5;
  const auto c = make_frozen(2, fp);
  const auto levy = jumpy(2);
  const auto grid = TimeGrid::uniform(1.0, 0.02);
  const auto init = draw_initial(InitialLaw::gaussian(2, 0.0, 1.0), kBase, 8);
  const auto drivers = make_drivers(kBase, 8);
  const auto sys = simulate_particle_system(c, levy, init, drivers, grid, cfg(0.02));
  const auto dec = integrate_decoupled_batch(c, levy, point_flow(grid, 2), init, drivers, grid, cfg(0.02));
  for (std::size_t i = 0; i < 8; ++i) CHECK(sys.paths[i].states == dec[i].states);
  const auto coupled = simulate_coupled(c, levy, init, drivers, grid, point_flow(grid, 2), cfg(0.02));
  for (const auto& e : coupled.errors) {
    for (double v : e) CHECK(v == 0.0);
  }
}

TEST_CASE("particle system is exchangeable and independent of jobs") {
  CubicInteractionParams p;
  const auto c = make_cubic_interaction(1, p);
  const auto levy = jumpy(1);
  const auto grid = TimeGrid::uniform(0.5, 0.01);
  auto init = draw_initial(InitialLaw::uniform_box(1, -1, 1), kBase, 6);
  auto drivers = make_drivers(kBase, 6);
  const auto a = simulate_particle_system(c, levy, init, drivers, grid, cfg(0.01));
  std::swap(init[1], init[4]);
  std::swap(drivers[1], drivers[4]);
  auto par = cfg(0.01);
  par.jobs = 3;
  const auto b = simulate_particle_system(c, levy, init, drivers, grid, par);
  CHECK(a.paths[1].states == b.paths[4].states);
  CHECK(a.paths[4].states == b.paths[1].states);
  CHECK(a.paths[0].states == b.paths[0].states);
}

TEST_CASE("frozen model reaches the fixed point after one iteration") {
  FrozenParams fp;
  fp.gamma_f = 0.2;
  fp.g_scale = 0.2;
  const auto c = make_frozen(1, fp);
  const auto grid = TimeGrid::uniform(1.0, 0.05);
  auto sc = cfg(0.05);
  sc.tolerance = 1e-12;
  const auto r = picard_fixed_point(c, jumpy(1), InitialLaw::uniform_box(1, -1, 1), grid, sc, kBase);
  REQUIRE(r.trace.size() >= 2);
  CHECK(r.trace[0] > 0.0);
  CHECK(r.trace[1] == 0.0);
  CHECK(r.converged);
}

TEST_CASE("mean-field linear model: the flow mean solves m' = -(a - c) m") {
  LinearMeanfieldParams lp;  // a = 1, c = 0.5
  const auto c = make_linear_meanfield(1, lp);
  const auto grid = TimeGrid::uniform(1.0, 1e-3);
  auto sc = cfg(1e-3);
  sc.paths = 4;
  sc.tolerance = 1e-9;
  sc.gamma = 1.0;
  sc.max_iterations = 40;
  const auto r = picard_fixed_point(c, LevyModel::zero(1), InitialLaw::point(v1(1.0)), grid, sc, kBase);
  CHECK(r.converged);
  CHECK(r.flow.clouds().back().mean()[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-3));
  for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k] <= r.trace[k - 1] + 1e-15);
}

TEST_CASE("explosive drift raises a divergence error") {
  PolynomialDriftParams pp;
  pp.a3 = 1.0;
  const auto c = make_polynomial_drift(1, pp);
  const auto grid = TimeGrid::uniform(1.0, 0.1);
  CHECK_THROWS_AS(integrate_decoupled(c, LevyModel::zero(1), point_flow(grid, 1), v1(10.0),
                                      {kBase, std::nullopt}, grid, cfg(0.1)),
                  DivergenceError);
  const auto init = std::vector<Vec>{v1(0.0), v1(10.0)};
  try {
    simulate_particle_system(c, LevyModel::zero(1), init, make_drivers(kBase, 2), grid, cfg(0.1));
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.particle() == 1);
    CHECK(e.time() > 0.0);
  }
}

TEST_CASE("common layer without a common stream is rejected") {
  FrozenParams fp;
  auto c = make_frozen(1, fp);
  c.common = make_linear_common(0.1, 0.1);
  const auto levy = jumpy(1);
  const auto grid = TimeGrid::uniform(1.0, 0.1);
  CHECK_THROWS_AS(integrate_decoupled(c, levy, point_flow(grid, 1), v1(0.0), {kBase, std::nullopt},
                                      grid, cfg(0.1), &levy),
                  ConfigError);
}
