#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "wildrefit/bregman.hpp"
#include "wildrefit/errors.hpp"

using namespace wildrefit;
using wildrefit::testing::random_domain_point;

TEST_CASE("squared_l2 divergence and gradient") {
  BregmanLoss loss(Potential::squared_l2(2));
  Vector x(2), y(2);
  x << 1.0, 2.0;
  y << 0.0, 0.0;
  CHECK(divergence(loss, x, y) == doctest::Approx(2.5));
  Vector g = grad1_divergence(loss, x, y);
  CHECK(g(0) == 1.0);
  CHECK(g(1) == 2.0);
  CHECK(divergence(loss, x, x) == 0.0);
  CHECK(grad1_divergence(loss, x, x).isZero(0.0));
}

TEST_CASE("sqrt_bernoulli gradient difference matches finite differences") {
  const double eps0 = 0.1;
  BregmanLoss loss(Potential::sqrt_bernoulli(1, eps0));
  Vector x(1), y(1);
  x << 0.5;
  y << 0.25;
  auto phi = [](long double p) { return -std::sqrt(p) - std::sqrt(1.0L - p); };
  auto fd = [&](long double p) {
    const long double h = 1e-5L;
    return (phi(p + h) - phi(p - h)) / (2 * h);
  };
  const double expected = static_cast<double>(fd(0.5L) - fd(0.25L));
  CHECK(grad1_divergence(loss, x, y)(0) == doctest::Approx(expected).epsilon(1e-6));
  // direct divergence formula in extended precision
  const long double dexp = phi(0.5L) - phi(0.25L) - fd(0.25L) * 0.25L;
  CHECK(divergence(loss, x, y) == doctest::Approx(static_cast<double>(dexp)).epsilon(1e-6));
}

TEST_CASE("builtin constants") {
  auto l2 = Potential::squared_l2(3);
  CHECK(l2.alpha() == 1.0);
  CHECK(l2.beta() == 1.0);
  auto sb = Potential::sqrt_bernoulli(1, 0.25);
  CHECK(sb.beta() == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sb.alpha() == doctest::Approx(std::sqrt(2.0)));
  auto kl = Potential::clipped_simplex_kl(2, 0.1);
  CHECK(kl.alpha() == 1.0);
  CHECK(kl.beta() == doctest::Approx(10.0));
  CHECK(BregmanLoss(sb).c0() == doctest::Approx(std::sqrt(4.0 / std::sqrt(2.0))));
}

TEST_CASE("parameter and domain errors") {
  CHECK_THROWS_AS(Potential::sqrt_bernoulli(1, 0.5), InvalidInput);
  CHECK_THROWS_AS(Potential::sqrt_bernoulli(1, 0.0), InvalidInput);
  CHECK_THROWS_AS(Potential::clipped_simplex_kl(2, 0.5), InvalidInput);
  CHECK_THROWS_AS(Potential::clipped_simplex_kl(3, -0.1), InvalidInput);
  BregmanLoss sb(Potential::sqrt_bernoulli(1, 0.1));
  Vector x(1), y(1);
  x << 0.05;
  y << 0.5;
  CHECK_THROWS_AS(divergence(sb, x, y), InvalidInput);
  CHECK_THROWS_AS(grad1_divergence(sb, y, x), InvalidInput);
  BregmanLoss kl(Potential::clipped_simplex_kl(2, 0.1));
  Vector off(2), on(2);
  off << 0.5, 0.6;
  on << 0.5, 0.5;
  CHECK_THROWS_AS(divergence(kl, off, on), InvalidInput);
}

TEST_CASE("boundary points are accepted") {
  BregmanLoss sb(Potential::sqrt_bernoulli(1, 0.1));
  Vector lo(1), hi(1);
  lo << 0.1;
  hi << 0.9;
  CHECK(std::isfinite(divergence(sb, lo, hi)));
  BregmanLoss kl(Potential::clipped_simplex_kl(2, 0.1));
  Vector a(2), b(2);
  a << 0.1, 0.9;
  b << 0.9, 0.1;
  const double expected = 0.1 * std::log(0.1 / 0.9) + 0.9 * std::log(0.9 / 0.1);
  CHECK(divergence(kl, a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient oracle agrees with central differences") {
  Engine eng(7);
  for (auto kind : {PotentialKind::squared_l2, PotentialKind::sqrt_bernoulli, PotentialKind::clipped_simplex_kl}) {
    const int d = 3;
    auto pot = wildrefit::testing::potential_for(kind, d);
    for (int trial = 0; trial < 50; ++trial) {
      Vector u = random_domain_point(pot, eng, 1e-3);
      Vector g = pot.gradient(u);
      const double h = 1e-5;
      if (kind == PotentialKind::clipped_simplex_kl) {
        // directional derivatives along sum-zero directions e_j - e_k
        for (int j = 0; j + 1 < d; ++j) {
          Vector dir = Vector::Zero(d);
          dir(j) = 1.0;
          dir(j + 1) = -1.0;
          const double fd = (pot.value(u + h * dir) - pot.value(u - h * dir)) / (2 * h);
          CHECK(fd == doctest::Approx(g.dot(dir)).epsilon(1e-6));
        }
      } else {
        for (int j = 0; j < d; ++j) {
          Vector e = Vector::Zero(d);
          e(j) = h;
          const double fd = (pot.value(u + e) - pot.value(u - e)) / (2 * h);
          CHECK(fd == doctest::Approx(g(j)).epsilon(1e-6));
        }
      }
    }
  }
}

TEST_CASE("three-point equality and PL on random triples") {
  Engine eng(11);
  for (auto kind : {PotentialKind::squared_l2, PotentialKind::sqrt_bernoulli, PotentialKind::clipped_simplex_kl}) {
    auto pot = wildrefit::testing::potential_for(kind, 3);
    BregmanLoss loss(pot);
    for (int t = 0; t < 200; ++t) {
      Vector x = random_domain_point(pot, eng), y = random_domain_point(pot, eng), z = random_domain_point(pot, eng);
      const double dxz = divergence(loss, x, z);
      const double gap = dxz - divergence(loss, x, y) - divergence(loss, y, z) -
                         (pot.gradient(y) - pot.gradient(z)).dot(x - y);
      CHECK(std::abs(gap) <= 1e-9 * (1.0 + std::abs(dxz)));
      const Vector g = grad1_divergence(loss, x, y);
      CHECK(0.5 * g.squaredNorm() + 1e-9 >= loss.alpha() * loss.alpha() / loss.beta() * divergence(loss, x, y));
      CHECK(divergence(loss, x, y) >= 0.0);
    }
  }
}

TEST_CASE("grad2 is Hess(y) (y - x)") {
  BregmanLoss kl(Potential::clipped_simplex_kl(2, 0.1));
  Vector x(2), y(2);
  x << 0.3, 0.7;
  y << 0.6, 0.4;
  Vector g = grad2_divergence(kl, x, y);
  CHECK(g(0) == doctest::Approx((0.6 - 0.3) / 0.6));
  CHECK(g(1) == doctest::Approx((0.4 - 0.7) / 0.4));
}

TEST_CASE("potential kind strings round trip") {
  for (auto kind : {PotentialKind::squared_l2, PotentialKind::sqrt_bernoulli, PotentialKind::clipped_simplex_kl})
    CHECK(potential_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(potential_kind_from_string("huber"), InvalidInput);
  PotentialSpec spec{PotentialKind::sqrt_bernoulli, 0.2, 0.1};
  auto pot = builtin_potential(spec, 2);
  CHECK(pot.parameter() == 0.2);
  CHECK(pot.spec().kind == PotentialKind::sqrt_bernoulli);
}
