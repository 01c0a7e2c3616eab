#include <doctest.h>

#include "mvlab/rng.hpp"
#include "mvlab/types.hpp"

#include <cmath>
#include <set>

using namespace mvlab;

TEST_CASE("philox4x32-10 known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("equal seed and id replay the same sequence") {
  RandomStream a(42, {1, 2, 3, Layer::kBig});
  RandomStream b(42, {1, 2, 3, Layer::kBig});
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream c(42, {1, 2, 3, Layer::kBig});
  RandomStream d(42, {1, 2, 3, Layer::kBig});
  for (int i = 0; i < 100; ++i) {
    CHECK(c.normal() == d.normal());
    CHECK(c.exponential(2.0) == d.exponential(2.0));
  }
}

TEST_CASE("distinct ids give distinct streams") {
  std::set<std::uint64_t> first;
  for (std::uint32_t p = 0; p < 50; ++p) {
    for (auto l : {Layer::kInitial, Layer::kSmall, Layer::kBig, Layer::kCommonBig}) {
      RandomStream s(7, {0, 0, p, l});
      first.insert(s.next_u64());
    }
  }
  CHECK(first.size() == 200);
  RandomStream s1(1, {0, 0, 0, Layer::kSmall}), s2(2, {0, 0, 0, Layer::kSmall});
  CHECK(s1.next_u64() != s2.next_u64());
}

TEST_CASE("uniform lies in the open unit interval with mean 1/2") {
  RandomStream s(3, {});
  KahanSum sum;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum.add(u);
  }
  const double se = std::sqrt(1.0 / 12.0 / n);
  CHECK(std::abs(sum.value() / n - 0.5) < 4 * se);
}

TEST_CASE("normal and exponential moments") {
  RandomStream s(11, {0, 1, 0, Layer::kAuxiliary});
  const int n = 200000;
  KahanSum m1, m2, e1;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1.add(z);
    m2.add(z * z);
    e1.add(s.exponential(4.0));
  }
  CHECK(std::abs(m1.value() / n) < 4 / std::sqrt(n));
  CHECK(std::abs(m2.value() / n - 1.0) < 4 * std::sqrt(2.0 / n));
  CHECK(std::abs(e1.value() / n - 0.25) < 4 * 0.25 / std::sqrt(n));
}

TEST_CASE("experiment id beyond 24 bits is rejected") {
  CHECK_THROWS_AS(RandomStream(1, {kMaxExperimentId + 1, 0, 0, Layer::kSmall}), Error);
  CHECK_NOTHROW(RandomStream(1, {kMaxExperimentId, 0, 0, Layer::kSmall}));
}

TEST_CASE("mix64 is a bijection on samples") {
  std::set<std::uint64_t> out;
  for (std::uint64_t i = 0; i < 10000; ++i) out.insert(mix64(i));
  CHECK(out.size() == 10000);
}
