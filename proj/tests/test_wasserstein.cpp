#include <doctest.h>

#include "mvlab/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mvlab;

namespace {

EmpiricalMeasure cloud(RandomStream& rng, int dim, std::size_t n, double shift = 0.0) {
  Eigen::MatrixXd pts(dim, static_cast<Eigen::Index>(n));
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    for (int k = 0; k < dim; ++k) pts(k, j) = rng.normal() + shift;
  }
  return EmpiricalMeasure(pts);
}

// Minimum over all n! couplings.
double brute_force_pp(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  std::vector<std::size_t> perm(a.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      c += std::pow((a.point(i) - b.point(perm[i])).norm(), p);
    }
    best = std::min(best, c / static_cast<double>(perm.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("one-dimensional examples") {
  const std::vector<double> a{0.0, 2.0}, b{1.0, 3.0};
  CHECK(w_p_1d(EmpiricalMeasure::from_scalars(a), EmpiricalMeasure::from_scalars(b), 1.0) ==
        doctest::Approx(1.0));
  CHECK(w_p_1d(EmpiricalMeasure::from_scalars(a), EmpiricalMeasure::from_scalars(b), 2.0) ==
        doctest::Approx(1.0));
  const std::vector<double> z{0.0}, o{1.0};
  CHECK(w_p_1d(EmpiricalMeasure::from_scalars(z), EmpiricalMeasure::from_scalars(o), 1.7) ==
        doctest::Approx(1.0));
  CHECK(w_pp_1d(a, b, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("two-dimensional shifted square") {
  Eigen::MatrixXd sq(2, 4), shifted(2, 4);
  sq << 0, 1, 0, 1, 0, 0, 1, 1;
  shifted = sq;
  shifted.row(0).array() += 1.0;
  const auto r = w_p_exact(EmpiricalMeasure(sq), EmpiricalMeasure(shifted), 2.0);
  CHECK(r.distance == doctest::Approx(1.0));
  CHECK(r.plan.assignment.size() == 4);
}

TEST_CASE("exact assignment agrees with the sorted coupling in 1D") {
  RandomStream rng(11, {});
  for (double p : {1.0, 1.5, 2.0}) {
    const auto a = cloud(rng, 1, 256), b = cloud(rng, 1, 256, 0.3);
    CHECK(std::abs(w_p_exact(a, b, p).distance - w_p_1d(a, b, p)) < 1e-9);
  }
}

TEST_CASE("exact assignment agrees with enumeration of couplings") {
  RandomStream rng(12, {});
  for (std::size_t n = 1; n <= 7; ++n) {
    for (int t = 0; t < 5; ++t) {
      const auto a = cloud(rng, 2, n), b = cloud(rng, 2, n, 0.5);
      for (double p : {1.0, 2.0}) {
        const auto r = w_p_exact(a, b, p);
        CHECK(std::abs(r.plan.cost - brute_force_pp(a, b, p)) < 1e-10);
        CHECK(r.distance == doctest::Approx(std::pow(r.plan.cost, 1.0 / p)));
      }
    }
  }
}

TEST_CASE("metric axioms") {
  RandomStream rng(13, {});
  for (int t = 0; t < 30; ++t) {
    const auto a = cloud(rng, 3, 20), b = cloud(rng, 3, 20, 0.4), c = cloud(rng, 3, 20, -0.2);
    for (double p : {1.0, 2.0}) {
      const double ab = w_p_exact(a, b, p).distance, ba = w_p_exact(b, a, p).distance;
      const double ac = w_p_exact(a, c, p).distance, cb = w_p_exact(c, b, p).distance;
      CHECK(w_p_exact(a, a, p).distance == doctest::Approx(0.0));
      CHECK(std::abs(ab - ba) < 1e-9);
      CHECK(ab <= ac + cb + 1e-9);
    }
  }
}

TEST_CASE("W_p is nondecreasing in p") {
  RandomStream rng(14, {});
  for (int t = 0; t < 20; ++t) {
    const auto a = cloud(rng, 2, 16), b = cloud(rng, 2, 16, 1.0);
    double prev = 0.0;
    for (double p = 1.0; p <= 2.0 + 1e-12; p += 0.25) {
      const double cur = w_p_exact(a, b, p).distance;
      CHECK(cur >= prev - 1e-9);
      prev = cur;
    }
  }
}

TEST_CASE("translation by a vector v gives W_p = |v|") {
  RandomStream rng(15, {});
  const auto a = cloud(rng, 2, 30);
  Eigen::MatrixXd pts = a.points();
  pts.row(0).array() += 3.0;
  pts.row(1).array() -= 4.0;
  CHECK(w_p_exact(a, EmpiricalMeasure(pts), 2.0).distance == doctest::Approx(5.0));
  CHECK(w_p_exact(a, EmpiricalMeasure(pts), 1.0).distance == doctest::Approx(5.0));
}

TEST_CASE("sliced surrogate") {
  RandomStream rng(16, {});
  const auto a = cloud(rng, 2, 40), b = cloud(rng, 2, 40, 0.7);
  const NoiseStream s{3, {0, 0, 0, Layer::kAuxiliary}};
  CHECK(w_p_sliced(a, a, 2.0, 32, s).distance == doctest::Approx(0.0));
  const auto sl = w_p_sliced(a, b, 2.0, 64, s);
  CHECK(sl.distance <= w_p_exact(a, b, 2.0).distance + 1e-9);
  CHECK(sl.projections == 64);
  const auto a1 = cloud(rng, 1, 40), b1 = cloud(rng, 1, 40, 0.7);
  CHECK(w_p_sliced(a1, b1, 1.5, 8, s).distance == doctest::Approx(w_p_1d(a1, b1, 1.5)));
  const auto again = w_p_sliced(a, b, 2.0, 64, s);
  CHECK(again.distance == sl.distance);
}

TEST_CASE("wasserstein_pow dispatch") {
  RandomStream rng(17, {});
  const auto a = cloud(rng, 2, 10), b = cloud(rng, 2, 10, 0.2);
  WassersteinOptions o;
  CHECK(wasserstein_pow(a, b, 2.0, o) == doctest::Approx(w_p_exact(a, b, 2.0).plan.cost));
  o.method = WassersteinMethod::kSliced;
  CHECK(wasserstein_pow(a, b, 2.0, o) <= w_p_exact(a, b, 2.0).plan.cost + 1e-9);
}

TEST_CASE("flow distance example") {
  const std::vector<double> grid{1.0, 2.0};
  const std::vector<double> z{0.0}, one{1.0}, four{4.0};
  MeasureFlow a(grid, {EmpiricalMeasure::from_scalars(z), EmpiricalMeasure::from_scalars(z)});
  MeasureFlow b(grid, {EmpiricalMeasure::from_scalars(one), EmpiricalMeasure::from_scalars(four)});
  // max(e^{-ln2} * 1, e^{-2 ln2} * 4) = max(0.5, 1)
  CHECK(flow_distance(a, b, 2.0, std::log(2.0)) == doctest::Approx(1.0));
  // With gamma = 0: sup of the raw distances.
  CHECK(flow_distance(a, b, 2.0, 0.0) == doctest::Approx(4.0));
}

TEST_CASE("conditional flow distance over one path reduces to the flow distance") {
  RandomStream rng(18, {});
  const std::vector<double> grid{0.0, 0.5, 1.0};
  std::vector<EmpiricalMeasure> ca, cb;
  for (int k = 0; k < 3; ++k) {
    ca.push_back(cloud(rng, 2, 12));
    cb.push_back(cloud(rng, 2, 12, 0.3));
  }
  const std::vector<MeasureFlow> a{MeasureFlow(grid, ca)}, b{MeasureFlow(grid, cb)};
  CHECK(conditional_flow_distance(a, b, 2.0, 1.0) == doctest::Approx(flow_distance(a[0], b[0], 2.0, 1.0)));
}

TEST_CASE("size mismatch and cap") {
  RandomStream rng(19, {});
  const auto a = cloud(rng, 2, 10), b = cloud(rng, 2, 11);
  CHECK_THROWS_AS(w_p_exact(a, b, 2.0), SizeError);
  const auto c = cloud(rng, 2, 10);
  CHECK_THROWS_AS(w_p_exact(a, c, 2.0, 5), SizeError);
  CHECK_THROWS_AS(w_p_exact(a, c, 0.5), DomainError);
}
