#include "mvlab/solver.hpp"

#include "mvlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mvlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PathCursors {
  PoissonCursor small;
  PoissonCursor big;
  std::optional<PoissonCursor> common_small;
  std::optional<PoissonCursor> common_big;
  // Forced big jumps replace `big` when non-empty (test hook).
  std::vector<JumpEvent> forced;
  std::size_t forced_next = 0;
  bool use_forced = false;

  double next_big_time() const {
    if (use_forced) return forced_next < forced.size() ? forced[forced_next].time : kInf;
    return big.peek_time();
  }
  JumpEvent pop_big() {
    if (use_forced) return forced[forced_next++];
    return big.pop();
  }
};

PathCursors open_cursors(const Dynamics& dyn, const PathDriver& driver, double horizon) {
  const LevyModel& levy = dyn.levy();
  PathCursors cur{
      PoissonCursor(driver.own.layer(Layer::kSmall).open(), levy.small.rate,
                    levy.sampler(Band::kSmall), 0.0, horizon, Band::kSmall),
      PoissonCursor(driver.own.layer(Layer::kBig).open(), levy.big.rate, levy.sampler(Band::kBig),
                    0.0, horizon, Band::kBig),
      std::nullopt, std::nullopt, {}, 0, false};
  if (const LevyModel* cl = dyn.common_levy()) {
    if (!driver.common) throw ConfigError("common noise layer configured but no common stream");
    cur.common_small.emplace(driver.common->layer(Layer::kCommonSmall).open(), cl->small.rate,
                             cl->sampler(Band::kSmall), 0.0, horizon, Band::kSmall);
    cur.common_big.emplace(driver.common->layer(Layer::kCommonBig).open(), cl->big.rate,
                           cl->sampler(Band::kBig), 0.0, horizon, Band::kBig);
  }
  return cur;
}

void check_finite(const Dynamics& dyn, const Vec& x, double t, std::ptrdiff_t particle) {
  const double norm = x.norm();
  if (!std::isfinite(norm) || norm > dyn.config().divergence_threshold) {
    std::ostringstream msg;
    msg << "divergence: |x| exceeded " << dyn.config().divergence_threshold << " at t=" << t;
    if (particle >= 0) msg << " (particle " << particle << ")";
    throw DivergenceError(t, particle, msg.str());
  }
}

// Euler step on (s, target] with coefficients frozen at the step start;
// small jumps enter compensated.
void euler_substep(const Dynamics& dyn, Vec& x, double s, double target,
                   const EmpiricalMeasure& mu, PathCursors& cur) {
  const CoefficientSet& c = dyn.coeffs();
  const LevyModel& levy = dyn.levy();
  const Vec x0 = x;
  const double dt = target - s;
  Vec incr = dt * c.drift(x0, mu);
  if (levy.small.rate > 0.0) {
    incr -= dt * small_jump_compensator(c.small_jump, c.small_jump_scale, levy, dyn.quadrature(), x0, mu);
    while (!cur.small.done() && cur.small.peek_time() <= target) {
      incr += c.small_jump(x0, mu, cur.small.pop().mark);
    }
  }
  if (cur.common_small && dyn.common_levy()->small.rate > 0.0) {
    const auto& cc = *c.common;
    incr -= dt * small_jump_compensator(cc.small_jump, cc.small_jump_scale, *dyn.common_levy(),
                                        dyn.common_quadrature(), x0, mu);
    while (!cur.common_small->done() && cur.common_small->peek_time() <= target) {
      incr += cc.small_jump(x0, mu, cur.common_small->pop().mark);
    }
  }
  x = x0 + incr;
}

void record(PathSolution* rec, double t, const Vec& x) {
  if (!rec) return;
  if (!rec->times.empty() && rec->times.back() == t) {
    for (int k = 0; k < rec->dim; ++k) {
      rec->states[(rec->times.size() - 1) * static_cast<std::size_t>(rec->dim) + static_cast<std::size_t>(k)] = x(k);
    }
    return;
  }
  rec->push(t, x);
}

// Advances x over (t0, t1] against the frozen cloud mu, splicing big jumps
// (idiosyncratic before common on exact ties) at their event times.
void advance(const Dynamics& dyn, Vec& x, double t0, double t1, const EmpiricalMeasure& mu,
             PathCursors& cur, PathSolution* rec, std::vector<AppliedJump>* common_log,
             std::ptrdiff_t particle) {
  double s = t0;
  for (;;) {
    const double t_own = cur.next_big_time();
    const double t_common = cur.common_big ? cur.common_big->peek_time() : kInf;
    const bool common_next = t_common < t_own;
    const double sigma = std::min(t_own, t_common);
    const double target = sigma <= t1 ? sigma : t1;
    if (target > s) {
      euler_substep(dyn, x, s, target, mu, cur);
      check_finite(dyn, x, target, particle);
    }
    if (sigma > t1) break;
    const JumpEvent ev = common_next ? cur.common_big->pop() : cur.pop_big();
    const Vec inc = common_next ? dyn.coeffs().common->big_jump(x, mu, ev.mark)
                                : dyn.coeffs().big_jump(x, mu, ev.mark);
    x += inc;
    check_finite(dyn, x, sigma, particle);
    if (rec) {
      record(rec, sigma, x);
      rec->jumps.push_back({sigma, ev.mark, inc, common_next});
    }
    if (common_next && common_log) common_log->push_back({sigma, ev.mark, Vec(), true});
    s = sigma;
  }
  record(rec, t1, x);
}

void require_flow_on_grid(const MeasureFlow& flow, const TimeGrid& grid, int dim) {
  if (flow.size() == 0) throw DomainError("frozen flow is empty");
  if (flow.grid().front() > 0.0) throw DomainError("frozen flow must start at t = 0");
  if (flow.at_index(0).dim() != dim) throw DomainError("frozen flow dimension mismatch");
  if (flow.grid().back() < grid.base[grid.steps() > 0 ? grid.steps() - 1 : 0]) {
    throw DomainError("frozen flow does not cover the time grid");
  }
}

PathSolution integrate_impl(const Dynamics& dyn, const MeasureFlow& flow, const Vec& x0,
                            PathCursors& cur, const TimeGrid& grid) {
  if (x0.size() != dyn.coeffs().dim) throw DomainError("initial state dimension mismatch");
  if (!x0.allFinite()) throw DomainError("initial state must be finite");
  require_flow_on_grid(flow, grid, dyn.coeffs().dim);
  PathSolution path;
  path.dim = dyn.coeffs().dim;
  path.push(0.0, x0);
  Vec x = x0;
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    advance(dyn, x, grid.base[k], grid.base[k + 1], flow.at(grid.base[k]), cur, &path, nullptr, -1);
  }
  return path;
}

}  // namespace

TimeGrid TimeGrid::uniform(double horizon, double step) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("time grid: T must be positive");
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("time grid: h must be positive");
  TimeGrid g;
  g.horizon = horizon;
  g.step = step;
  const double ratio = horizon / step;
  auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    steps = static_cast<std::size_t>(std::ceil(ratio));
  }
  steps = std::max<std::size_t>(steps, 1);
  g.base.reserve(steps + 1);
  for (std::size_t k = 0; k < steps; ++k) g.base.push_back(static_cast<double>(k) * step);
  g.base.push_back(horizon);
  if (g.base.size() >= 2 && !(g.base[g.base.size() - 2] < horizon)) {
    g.base.erase(g.base.end() - 2);
  }
  return g;
}

Vec PathSolution::state(std::size_t k) const {
  Vec x(dim);
  for (int c = 0; c < dim; ++c) x(c) = states[k * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)];
  return x;
}

void PathSolution::push(double t, const Vec& x) {
  times.push_back(t);
  for (int c = 0; c < dim; ++c) states.push_back(x(c));
}

InitialLaw InitialLaw::point(const Vec& x0) {
  return {static_cast<int>(x0.size()), "point", [x0](RandomStream&) { return x0; }};
}

InitialLaw InitialLaw::uniform_box(int dim, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("uniform_box initial law: require hi > lo");
  return {dim, "uniform_box", [dim, lo, hi](RandomStream& rng) {
            Vec x(dim);
            for (int k = 0; k < dim; ++k) x(k) = lo + (hi - lo) * rng.uniform();
            return x;
          }};
}

InitialLaw InitialLaw::gaussian(int dim, double mean, double sd) {
  if (!(sd >= 0.0)) throw ConfigError("gaussian initial law: sd must be >= 0");
  return {dim, "gaussian", [dim, mean, sd](RandomStream& rng) {
            Vec x(dim);
            for (int k = 0; k < dim; ++k) x(k) = mean + sd * rng.normal();
            return x;
          }};
}

InitialLaw InitialLaw::scaled(double factor) const {
  InitialLaw out = *this;
  out.name = name + "*" + std::to_string(factor);
  out.draw = [inner = draw, factor](RandomStream& rng) -> Vec { return factor * inner(rng); };
  return out;
}

Dynamics::Dynamics(const CoefficientSet& coeffs, const LevyModel& levy,
                   const LevyModel* common_levy, const SolverConfig& config)
    : coeffs_(&coeffs), levy_(&levy), common_levy_(common_levy), config_(&config) {
  coeffs.validate();
  levy.validate();
  if (levy.dim != coeffs.dim) throw ConfigError("Levy model and coefficients differ in dimension");
  if (common_levy) {
    common_levy->validate();
    if (!coeffs.common) throw ConfigError("common noise layer requires coefficients (f0, g0)");
    if (common_levy->dim != coeffs.dim) throw ConfigError("common Levy model dimension mismatch");
  }
  if (levy.small.rate > 0.0 && !coeffs.small_jump_scale) {
    quad_ = MarkQuadrature::build(levy, Band::kSmall, config.compensator_marks);
  }
  if (common_levy && common_levy->small.rate > 0.0 && !coeffs.common->small_jump_scale) {
    quad_common_ = MarkQuadrature::build(*common_levy, Band::kSmall, config.compensator_marks);
  }
}

PathSolution integrate_decoupled(const CoefficientSet& coeffs, const LevyModel& levy,
                                 const MeasureFlow& flow, const Vec& x0, const PathDriver& driver,
                                 const TimeGrid& grid, const SolverConfig& config,
                                 const LevyModel* common_levy) {
  const Dynamics dyn(coeffs, levy, common_levy, config);
  PathCursors cur = open_cursors(dyn, driver, grid.horizon);
  return integrate_impl(dyn, flow, x0, cur, grid);
}

PathSolution integrate_decoupled_forced(const CoefficientSet& coeffs, const LevyModel& levy,
                                        const MeasureFlow& flow, const Vec& x0,
                                        const PathDriver& driver, const TimeGrid& grid,
                                        const SolverConfig& config,
                                        const std::vector<JumpEvent>& forced_big_jumps) {
  const Dynamics dyn(coeffs, levy, nullptr, config);
  PathCursors cur = open_cursors(dyn, driver, grid.horizon);
  cur.forced = forced_big_jumps;
  std::sort(cur.forced.begin(), cur.forced.end(),
            [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
  cur.use_forced = true;
  return integrate_impl(dyn, flow, x0, cur, grid);
}

std::vector<PathSolution> integrate_decoupled_batch(const CoefficientSet& coeffs,
                                                    const LevyModel& levy, const MeasureFlow& flow,
                                                    const std::vector<Vec>& initial,
                                                    const std::vector<PathDriver>& drivers,
                                                    const TimeGrid& grid, const SolverConfig& config,
                                                    const LevyModel* common_levy) {
  if (initial.size() != drivers.size()) throw DomainError("one driver per path required");
  const Dynamics dyn(coeffs, levy, common_levy, config);
  std::vector<PathSolution> out(initial.size());
  parallel_for(initial.size(), config.jobs, [&](std::size_t i) {
    PathCursors cur = open_cursors(dyn, drivers[i], grid.horizon);
    try {
      out[i] = integrate_impl(dyn, flow, initial[i], cur, grid);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.time(), static_cast<std::ptrdiff_t>(i), e.what());
    }
  });
  return out;
}

std::vector<Vec> states_on_grid(const PathSolution& path, const TimeGrid& grid) {
  std::vector<Vec> out;
  out.reserve(grid.base.size());
  std::size_t j = 0;
  for (double t : grid.base) {
    while (j < path.size() && path.times[j] < t) ++j;
    if (j == path.size() || path.times[j] != t) {
      throw DomainError("path does not contain base grid time " + std::to_string(t));
    }
    out.push_back(path.state(j));
  }
  return out;
}

std::vector<Vec> draw_initial(const InitialLaw& initial, const NoiseStream& base,
                              std::size_t count, std::uint32_t first_particle) {
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng = base.particle(first_particle + static_cast<std::uint32_t>(i)).layer(Layer::kInitial).open();
    Vec x = initial.draw(rng);
    if (x.size() != initial.dim) throw DomainError("initial law returned wrong dimension");
    out.push_back(std::move(x));
  }
  return out;
}

std::vector<PathDriver> make_drivers(const NoiseStream& base, std::size_t count,
                                     std::uint32_t first_particle,
                                     std::optional<NoiseStream> common) {
  std::vector<PathDriver> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back({base.particle(first_particle + static_cast<std::uint32_t>(i)), common});
  }
  return out;
}

ParticleSystem simulate_particle_system(const CoefficientSet& coeffs, const LevyModel& levy,
                                        const std::vector<Vec>& initial,
                                        const std::vector<PathDriver>& drivers,
                                        const TimeGrid& grid, const SolverConfig& config,
                                        const LevyModel* common_levy, bool record_paths) {
  const std::size_t n = initial.size();
  if (n < 1) throw DomainError("particle system needs n >= 1");
  if (drivers.size() != n) throw DomainError("one driver per particle required");
  const Dynamics dyn(coeffs, levy, common_levy, config);

  std::vector<Vec> x = initial;
  std::vector<PathCursors> cursors;
  cursors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i].size() != coeffs.dim || !x[i].allFinite()) {
      throw DomainError("particle initial state invalid");
    }
    cursors.push_back(open_cursors(dyn, drivers[i], grid.horizon));
  }
  ParticleSystem out;
  if (record_paths) {
    out.paths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      out.paths[i].dim = coeffs.dim;
      out.paths[i].push(0.0, x[i]);
    }
  }
  std::vector<EmpiricalMeasure> clouds;
  clouds.reserve(grid.base.size());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    clouds.push_back(EmpiricalMeasure::from_points(x));
    const EmpiricalMeasure& snapshot = clouds.back();
    const double t0 = grid.base[k];
    const double t1 = grid.base[k + 1];
    // The common log is taken from particle 0; every particle sees the same common events.
    parallel_for(n, config.jobs, [&](std::size_t i) {
      advance(dyn, x[i], t0, t1, snapshot, cursors[i], record_paths ? &out.paths[i] : nullptr,
              i == 0 ? &out.common_jumps : nullptr, static_cast<std::ptrdiff_t>(i));
    });
  }
  clouds.push_back(EmpiricalMeasure::from_points(x));
  out.flow = MeasureFlow(grid.base, std::move(clouds));
  return out;
}

ParticleSystem simulate_particle_system(const CoefficientSet& coeffs, const LevyModel& levy,
                                        std::size_t n, const InitialLaw& initial,
                                        const TimeGrid& grid, const NoiseStream& base,
                                        const SolverConfig& config) {
  return simulate_particle_system(coeffs, levy, draw_initial(initial, base, n),
                                  make_drivers(base, n), grid, config);
}

CoupledSystem simulate_coupled(const CoefficientSet& coeffs, const LevyModel& levy,
                               const std::vector<Vec>& initial,
                               const std::vector<PathDriver>& drivers, const TimeGrid& grid,
                               const MeasureFlow& reference, const SolverConfig& config,
                               const LevyModel* common_levy) {
  CoupledSystem out;
  out.system = simulate_particle_system(coeffs, levy, initial, drivers, grid, config, common_levy, true);
  out.limit = integrate_decoupled_batch(coeffs, levy, reference, initial, drivers, grid, config,
                                       common_levy);
  const std::size_t n = initial.size();
  out.errors.resize(n);
  parallel_for(n, config.jobs, [&](std::size_t i) {
    const PathSolution& a = out.system.paths[i];
    const PathSolution& b = out.limit[i];
    if (a.times != b.times) throw DomainError("coupled paths have different realized grids");
    auto& err = out.errors[i];
    err.resize(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) err[k] = (a.state(k) - b.state(k)).norm();
  });
  return out;
}

ConditionalPicardResult picard_family(const CoefficientSet& coeffs, const LevyModel& levy,
                                      const LevyModel* common_levy, const InitialLaw& initial,
                                      const TimeGrid& grid, const SolverConfig& config,
                                      const NoiseStream& base,
                                      const std::vector<std::optional<NoiseStream>>& commons,
                                      const std::vector<MeasureFlow>* initial_flows,
                                      bool conditional_metric) {
  const std::size_t m = config.paths;
  const std::size_t k_paths = commons.size();
  if (m < 2) throw DomainError("fixed point needs m >= 2 paths");
  if (k_paths < 1) throw DomainError("fixed point needs at least one common path");
  if (!(config.tolerance > 0.0)) throw DomainError("fixed point tolerance must be positive");
  if (config.max_iterations < 1) throw DomainError("fixed point needs max_iterations >= 1");
  const Dynamics dyn(coeffs, levy, common_levy, config);
  const int dim = coeffs.dim;
  const std::vector<Vec> x0 = draw_initial(initial, base, m);
  const std::size_t points = grid.base.size();

  std::vector<MeasureFlow> flows;
  if (initial_flows) {
    if (initial_flows->size() != k_paths) throw DomainError("one initial flow per common path required");
    for (const auto& f : *initial_flows) {
      if (f.grid() != grid.base) throw DomainError("initial flow must live on the base grid");
    }
    flows = *initial_flows;
  } else {
    flows.assign(k_paths, MeasureFlow::constant(grid.base, EmpiricalMeasure::from_points(x0)));
  }

  ConditionalPicardResult out;
  for (int it = 0; it < config.max_iterations; ++it) {
    // CRN: every iteration reuses the same noise; otherwise shift particle ids.
    const auto offset = config.common_random_numbers ? 0u : static_cast<std::uint32_t>((it + 1) * m);
    std::vector<MeasureFlow> next(k_paths);
    for (std::size_t c = 0; c < k_paths; ++c) {
      std::vector<Eigen::MatrixXd> grid_states(points, Eigen::MatrixXd(dim, static_cast<Eigen::Index>(m)));
      const MeasureFlow& frozen = flows[c];
      parallel_for(m, config.jobs, [&](std::size_t j) {
        PathDriver driver{base.particle(static_cast<std::uint32_t>(j) + offset), commons[c]};
        PathCursors cur = open_cursors(dyn, driver, grid.horizon);
        Vec x = x0[j];
        grid_states[0].col(static_cast<Eigen::Index>(j)) = x;
        for (std::size_t k = 0; k < grid.steps(); ++k) {
          advance(dyn, x, grid.base[k], grid.base[k + 1], frozen.at_index(k), cur, nullptr, nullptr,
                  static_cast<std::ptrdiff_t>(j));
          grid_states[k + 1].col(static_cast<Eigen::Index>(j)) = x;
        }
      });
      std::vector<EmpiricalMeasure> clouds;
      clouds.reserve(points);
      for (auto& s : grid_states) clouds.emplace_back(std::move(s));
      next[c] = MeasureFlow(grid.base, std::move(clouds));
    }
    const double dist =
        conditional_metric
            ? conditional_flow_distance(next, flows, coeffs.beta, config.gamma, config.wasserstein)
            : flow_distance(next[0], flows[0], coeffs.beta, config.gamma, config.wasserstein);
    out.trace.push_back(dist);
    flows = std::move(next);
    out.iterations = it + 1;
    if (dist < config.tolerance) {
      out.converged = true;
      break;
    }
  }
  out.flows = std::move(flows);
  return out;
}

PicardResult picard_fixed_point(const CoefficientSet& coeffs, const LevyModel& levy,
                                const InitialLaw& initial, const TimeGrid& grid,
                                const SolverConfig& config, const NoiseStream& base,
                                const std::optional<MeasureFlow>& initial_flow) {
  std::vector<MeasureFlow> init;
  if (initial_flow) init.push_back(*initial_flow);
  auto fam = picard_family(coeffs, levy, nullptr, initial, grid, config, base, {std::nullopt},
                           initial_flow ? &init : nullptr, false);
  PicardResult out;
  out.flow = std::move(fam.flows.front());
  out.trace = std::move(fam.trace);
  out.converged = fam.converged;
  out.iterations = fam.iterations;
  return out;
}

}  // namespace mvlab
