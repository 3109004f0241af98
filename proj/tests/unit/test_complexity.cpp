#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "wildrefit/complexity.hpp"
#include "wildrefit/errors.hpp"
#include "wildrefit/trainer.hpp"

using namespace wildrefit;
using wildrefit::testing::gaussian_matrix;
using wildrefit::testing::random_domain_matrix;

namespace {

double closed_form(double r, const Matrix& z) {
  return r * std::sqrt(2.0 / static_cast<double>(z.rows())) * z.norm();
}

}  // namespace

TEST_CASE("W_n matches the squared_l2 closed form inside a large box") {
  Engine eng(1);
  BregmanLoss loss(Potential::squared_l2(3));
  auto set = CompactSet::box(3, -1e3, 1e3);
  for (int t = 0; t < 10; ++t) {
    PredictionMatrix fhat{gaussian_matrix(50, 3, eng)};
    Matrix z = gaussian_matrix(50, 3, eng);
    for (double r : {0.01, 0.3, 2.0}) {
      auto sol = wn_solve(loss, set, fhat.values, z, r);
      CHECK(sol.value == doctest::Approx(closed_form(r, z)).epsilon(1e-6));
      CHECK(sol.upper_bound >= sol.value - 1e-12);
      CHECK(sol.constraint <= r * r * (1 + 1e-12));
    }
  }
}

TEST_CASE("W_n at r = 0 and monotone in r") {
  Engine eng(2);
  for (auto kind : {PotentialKind::squared_l2, PotentialKind::sqrt_bernoulli, PotentialKind::clipped_simplex_kl}) {
    auto pot = wildrefit::testing::potential_for(kind, 3);
    BregmanLoss loss(pot);
    auto set = default_compact_set(pot, 2.0);
    PredictionMatrix fhat{random_domain_matrix(pot, 30, eng)};
    for (Eigen::Index i = 0; i < 30; ++i) fhat.values.row(i) = set.project(fhat.row(i)).transpose();
    Matrix z = gaussian_matrix(30, 3, eng, 0.2);
    CHECK(wn(loss, set, fhat, z, 0.0) == 0.0);
    double prev = 0.0;
    for (double r = 0.01; r < 2.0; r *= 1.5) {
      const double v = wn(loss, set, fhat, z, r);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
    CHECK_THROWS_AS(wn(loss, set, fhat, z, -0.1), InvalidInput);
  }
}

TEST_CASE("KL W_n is sandwiched by its dual bound and feasible points") {
  Engine eng(3);
  auto pot = Potential::clipped_simplex_kl(4, 0.02);
  BregmanLoss loss(pot);
  auto set = CompactSet::clipped_simplex(4, 0.02);
  PredictionMatrix fhat{random_domain_matrix(pot, 25, eng)};
  Matrix z = gaussian_matrix(25, 4, eng, 0.3);
  for (double r : {0.05, 0.2, 0.5}) {
    auto sol = wn_solve(loss, set, fhat.values, z, r);
    CHECK(sol.upper_bound >= sol.value - 1e-12);
    CHECK((sol.upper_bound - sol.value) <= 1e-6 * std::max(1.0, sol.value));
    CHECK(rows_in_set(set, sol.argmax));
    CHECK(empirical_discrepancy(loss, fhat.values, sol.argmax) <= r * r * (1 + 1e-9));
    // random feasible points never beat the solver
    for (int t = 0; t < 30; ++t) {
      Matrix u = random_domain_matrix(pot, 25, eng);
      for (Eigen::Index i = 0; i < 25; ++i) u.row(i) = set.project(u.row(i)).transpose();
      const double l = empirical_discrepancy(loss, fhat.values, u);
      if (l > r * r) {
        // shrink toward fhat along the segment until feasible
        double s = 1.0;
        Matrix v = u;
        while (empirical_discrepancy(loss, fhat.values, v) > r * r) {
          s *= 0.7;
          v = fhat.values + s * (u - fhat.values);
        }
        u = v;
      }
      double obj = 0.0;
      for (Eigen::Index i = 0; i < 25; ++i)
        obj += (pot.gradient(fhat.row(i)) - pot.gradient(u.row(i).transpose())).dot(z.row(i).transpose());
      CHECK(obj / 25 <= sol.upper_bound + 1e-10);
    }
  }
}

TEST_CASE("oracle variants") {
  Engine eng(4);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -100.0, 100.0);
  PredictionMatrix fhat{gaussian_matrix(40, 2, eng)};
  Matrix w = gaussian_matrix(40, 2, eng, 0.5);
  auto eps = sample_sign_matrix(40, 2, 5);
  const double r = 0.3;
  const Matrix z = eps.values.cwiseProduct(w);
  CHECK(wn_tilde_oracle(loss, set, fhat, w, eps, r) == wn(loss, set, fhat, z, r));
  CHECK(wn_tilde_oracle(loss, set, fhat, w, eps, r) == doctest::Approx(closed_form(r, z)).epsilon(1e-6));
  CHECK(wn_tilde_oracle(loss, set, fhat, w, eps, 0.0) == 0.0);
  CHECK(zn_eps_oracle(loss, set, fhat, w, eps, 0.0) == 0.0);
  CHECK(zn_eps_oracle(loss, set, fhat, w, eps, r) >= 0.0);
  CHECK(zn_eps_oracle(loss, set, fhat, w, eps, r) == doctest::Approx(closed_form(r, z)).epsilon(1e-6));

  PredictionMatrix fstar{fhat.values + gaussian_matrix(40, 2, eng, 0.1)};
  const double expected = closed_form(3.0 * r, eps.values.cwiseProduct(fhat.values - fstar.values));
  CHECK(pilot_error_oracle(loss, set, fhat, fstar, eps, r) == doctest::Approx(expected).epsilon(1e-6));
  CHECK(pilot_error_oracle(loss, set, fhat, fhat, eps, r) == 0.0);
  CHECK(pilot_error_oracle(loss, set, fhat, fstar, eps, 0.0) == 0.0);
}

TEST_CASE("Z_n is nonnegative on random instances") {
  Engine eng(5);
  for (auto kind : {PotentialKind::sqrt_bernoulli, PotentialKind::clipped_simplex_kl}) {
    auto pot = wildrefit::testing::potential_for(kind, 2);
    BregmanLoss loss(pot);
    auto set = default_compact_set(pot);
    for (int t = 0; t < 10; ++t) {
      PredictionMatrix fd{random_domain_matrix(pot, 20, eng)};
      Matrix w = gaussian_matrix(20, 2, eng, 0.1);
      auto eps = sample_sign_matrix(20, 2, t);
      CHECK(zn_eps_oracle(loss, set, fd, w, eps, 0.1) >= 0.0);
    }
  }
}

TEST_CASE("deviation term") {
  BregmanLoss loss(Potential::squared_l2(1));
  CHECK(deviation_term(loss, 0.0, 0.0, 1.0, 100, 1, 0.05) == 0.0);
  CHECK(deviation_term(loss, 0.0, 1.0, 1.0, 100, 1, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-14));
  const double a = deviation_term(loss, 0.1, 0.5, 0.7, 100, 2, 0.01);
  const double b = deviation_term(loss, 0.1, 0.5, 0.7, 200, 2, 0.01);
  CHECK(b == doctest::Approx(a / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(deviation_term(loss, 0.2, 0.5, 0.7, 100, 2, 0.01) > a);
  CHECK(deviation_term(loss, 0.1, 0.5, 0.7, 100, 3, 0.01) > a);
  CHECK(deviation_term(loss, 0.1, 0.5, 0.7, 100, 2, 0.001) > a);
  CHECK_THROWS_AS(deviation_term(loss, 0.0, 1.0, 1.0, 100, 1, 1.0), InvalidInput);
  CHECK_THROWS_AS(deviation_term(loss, 0.0, 1.0, 1.0, 100, 1, 0.0), InvalidInput);
  // sqrt_bernoulli uses beta^2 and alpha^{3/2}
  BregmanLoss sb(Potential::sqrt_bernoulli(1, 0.25));
  const double expected = 5.0 * 2.0 * 16.0 / (std::sqrt(2.0) * 10.0);
  CHECK(deviation_term(sb, 0.0, 1.0, 1.0, 100, 1, std::exp(-1.0)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("fixed-point radius") {
  Engine eng(6);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -1e3, 1e3);
  const double delta = std::exp(-10.0);
  const double ld = 10.0;
  SUBCASE("zero residues return r_min") {
    PredictionMatrix fhat{gaussian_matrix(100, 2, eng)};
    auto ev = make_wn_evaluator(loss, set, fhat, Matrix::Zero(100, 2));
    CHECK(fixed_point_radius(ev, delta, 100, {50.0}) == doctest::Approx(ld / 10.0));
  }
  SUBCASE("analytic root") {
    const Eigen::Index n = 2000;
    PredictionMatrix fhat{gaussian_matrix(n, 2, eng, 0.1)};
    Matrix z = gaussian_matrix(n, 2, eng, 1.0);
    auto ev = make_wn_evaluator(loss, set, fhat, z);
    const double root = (2.0 + 1.0 / ld) * std::sqrt(2.0 / n) * z.norm();
    REQUIRE(root > ld / std::sqrt(static_cast<double>(n)));
    const double r = fixed_point_radius(ev, delta, n, {50.0});
    CHECK(r == doctest::Approx(root).epsilon(1e-4));
    CHECK(r * r >= ev((2.0 + 1.0 / ld) * r) * (1 - 1e-12));
  }
  SUBCASE("errors") {
    PredictionMatrix fhat{gaussian_matrix(100, 2, eng)};
    auto ev = make_wn_evaluator(loss, set, fhat, gaussian_matrix(100, 2, eng));
    CHECK_THROWS_AS(fixed_point_radius(ev, 0.05, 100, {50.0}), InvalidInput);
    CHECK_THROWS_AS(fixed_point_radius(ev, delta, 100, {2.0}), UnboundedRadiusError);
  }
}

TEST_CASE("r_hat bounds") {
  Engine eng(7);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -1e3, 1e3);
  const double delta = std::exp(-9.0);
  const Eigen::Index n = 200;
  PredictionMatrix fhat{gaussian_matrix(n, 2, eng)};
  SUBCASE("zero residues collapse the max") {
    auto ev = make_wn_evaluator(loss, set, fhat, Matrix::Zero(n, 2));
    CHECK(rhat_first_claim_rhs(loss, ev, 0.7, delta, n, 0.0, 2, 0.0) == doctest::Approx(81.0 / n));
    const double rd = 0.05;
    auto b = rhat_bound_convex(loss, ev, rd, delta, n, 0.0, 2, 0.0, {5.0});
    CHECK(b.bound == doctest::Approx(std::max(rd, 9.0 / std::sqrt(200.0))).epsilon(1e-4));
    CHECK(b.bracket == doctest::Approx(rd));
  }
  SUBCASE("closed-form bracket") {
    // W_n saturates on the unit box, so the inequality eventually fails
    auto unit = CompactSet::box(2, -1.0, 1.0);
    PredictionMatrix f0{gaussian_matrix(n, 2, eng, 0.1).cwiseMax(-0.5).cwiseMin(0.5)};
    Matrix z = gaussian_matrix(n, 2, eng, 0.01);
    auto ev = make_wn_evaluator(loss, unit, f0, z);
    const double rd = 0.01;
    const double scale = 2.0 + 1.0 / 3.0;
    auto b = rhat_bound_convex(loss, ev, rd, delta, n, 0.05, 2, 0.0, {50.0});
    CHECK(b.bracket > rd);
    const double expected = std::max(rd, scale * std::sqrt(2.0 / n) * z.norm());
    CHECK(b.bracket == doctest::Approx(expected).epsilon(1e-4));
    // the returned bound violates the inequality and everything up to it that was sampled held
    CHECK(b.bound * b.bound > rhat_convex_claim_rhs(loss, ev, b.bound, rd, delta, n, 0.05, 2, 0.0));
  }
  CHECK(to_string(RadiusMethod::fixed_point) == "fixed_point");
  CHECK(radius_method_from_string("convex-class") == RadiusMethod::convex_class_bound);
  CHECK_THROWS_AS(radius_method_from_string("magic"), InvalidInput);
}

TEST_CASE("r_hat^2 <= Z_n(r_hat) for the saturated trainer") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Engine eng(seed);
    BregmanLoss loss(Potential::squared_l2(2));
    auto set = CompactSet::box(2, -1.0, 1.0);
    SaturatedTrainer trainer(loss, set);
    Matrix fstar = gaussian_matrix(60, 2, eng, 0.4).cwiseMax(-0.9).cwiseMin(0.9);
    Matrix w = gaussian_matrix(60, 2, eng, 0.5);
    FixedDesignDataset clean(Matrix(60, 0), fstar);
    FixedDesignDataset noisy(Matrix(60, 0), fstar + w);
    auto fdag = trainer.fit(clean);
    auto fhat = trainer.fit(noisy);
    const double rhat = std::sqrt(empirical_discrepancy(loss, fdag.values, fhat.values));
    SignMatrix ones{Matrix::Ones(60, 2), 0};
    CHECK(rhat * rhat <= zn_eps_oracle(loss, set, fdag, w, ones, rhat) + 1e-10);
  }
}
