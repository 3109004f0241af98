#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "wildrefit/errors.hpp"
#include "wildrefit/trainer.hpp"

using namespace wildrefit;

namespace {

FixedDesignDataset opaque(const Matrix& y) { return FixedDesignDataset(Matrix(y.rows(), 0), y); }

}  // namespace

TEST_CASE("saturated trainer reproduces interior responses") {
  Engine eng(1);
  BregmanLoss loss(Potential::squared_l2(3));
  auto set = CompactSet::box(3, -10.0, 10.0);
  Matrix y = wildrefit::testing::gaussian_matrix(20, 3, eng);
  auto f = fit_saturated(loss, set, opaque(y));
  CHECK(f.values == y);
  CHECK(empirical_discrepancy(loss, y, f.values) == 0.0);
}

TEST_CASE("saturated trainer clamps squared_l2") {
  BregmanLoss loss(Potential::squared_l2(1));
  auto set = CompactSet::box(1, 0.0, 1.0);
  Matrix y(1, 1);
  y << 1.5;
  CHECK(fit_saturated(loss, set, opaque(y)).values(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("saturated trainer sqrt_bernoulli boundary minimizer matches grid search") {
  BregmanLoss loss(Potential::sqrt_bernoulli(1, 0.05));
  auto set = CompactSet::box(1, 0.2, 0.8);
  Vector y(1);
  y << 0.1;
  Vector z = minimize_second_argument(loss, set, y);
  double best = 1e300, arg = 0.0;
  for (int k = 0; k <= 60000; ++k) {
    Vector c(1);
    c << 0.2 + 0.6 * k / 60000.0;
    const double v = divergence(loss, y, c);
    if (v < best) best = v, arg = c(0);
  }
  CHECK(z(0) == doctest::Approx(arg).epsilon(1e-5));
  CHECK(z(0) == doctest::Approx(0.2));
}

TEST_CASE("saturated trainer on the clipped simplex stays feasible and is stationary") {
  Engine eng(2);
  auto pot = Potential::clipped_simplex_kl(3, 0.05);
  BregmanLoss loss(pot);
  auto set = CompactSet::clipped_simplex(3, 0.15);
  Matrix y = wildrefit::testing::random_domain_matrix(pot, 25, eng);
  auto f = fit_saturated(loss, set, opaque(y));
  CHECK(rows_in_set(set, f.values));
  // exact minimizer of KL(y, .) restricted to the set is no worse than a random feasible point
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    Vector yi = y.row(i).transpose();
    const double v = divergence(loss, yi, f.row(i));
    for (int t = 0; t < 20; ++t) {
      Vector c = set.project(wildrefit::testing::random_domain_point(pot, eng));
      CHECK(v <= divergence(loss, yi, c) + 1e-9);
    }
    if (set.contains(yi)) CHECK((f.row(i) - yi).norm() <= 1e-9);
  }
}

TEST_CASE("linear trainer realizable case") {
  Engine eng(3);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -50.0, 50.0);
  Matrix x = wildrefit::testing::gaussian_matrix(60, 3, eng);
  Matrix theta = wildrefit::testing::gaussian_matrix(3, 2, eng);
  Matrix y = x * theta;
  y.rowwise() += Eigen::RowVector2d(0.5, -0.25);
  FixedDesignDataset data(x, y);
  auto fit = fit_linear_model(loss, set, data, {});
  const double train = empirical_discrepancy(loss, y, fit.predictions.values);
  CHECK(train <= 1e-8);
  CHECK(fit.model.predict_all(x).isApprox(fit.predictions.values));
}

TEST_CASE("linear trainer with no features fits the projected barycenter") {
  Engine eng(4);
  auto pot = Potential::sqrt_bernoulli(1, 0.05);
  BregmanLoss loss(pot);
  auto set = CompactSet::box(1, 0.1, 0.9);
  Matrix y = wildrefit::testing::random_domain_matrix(pot, 40, eng);
  auto f = fit_linear_class(loss, set, opaque(y), {});
  // 1-D oracle: minimize the mean divergence over a fine grid
  double best = 1e300, arg = 0.0;
  for (int k = 0; k <= 80000; ++k) {
    const double c = 0.1 + 0.8 * k / 80000.0;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) acc += pot.scalar_divergence(y(i, 0), c);
    if (acc < best) best = acc, arg = c;
  }
  CHECK(f.values(0, 0) == doctest::Approx(arg).epsilon(1e-4));
  CHECK((f.values.array() == f.values(0, 0)).all());
}

TEST_CASE("linear trainer objective is monotone in the iteration budget") {
  Engine eng(5);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -2.0, 2.0);
  Matrix x = wildrefit::testing::gaussian_matrix(50, 2, eng);
  Matrix y = wildrefit::testing::gaussian_matrix(50, 2, eng, 1.5);
  FixedDesignDataset data(x, y);
  double prev = 1e300;
  for (int iters : {1, 2, 4, 8, 16, 32, 64}) {
    LinearOptions opts;
    opts.max_iters = iters;
    auto fit = fit_linear_model(loss, set, data, opts);
    const double obj = fit.objective_trace.back();
    CHECK(obj <= prev);
    prev = obj;
  }
}

TEST_CASE("linear trainer reports non-convergence when asked") {
  Engine eng(6);
  BregmanLoss loss(Potential::squared_l2(1));
  auto set = CompactSet::box(1, -5.0, 5.0);
  Matrix x = wildrefit::testing::gaussian_matrix(30, 2, eng);
  Matrix y = wildrefit::testing::gaussian_matrix(30, 1, eng);
  LinearOptions opts;
  opts.max_iters = 1;
  opts.tol = 0.0;
  opts.require_convergence = true;
  try {
    fit_linear_model(loss, set, FixedDesignDataset(x, y), opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(!e.objective_trace().empty());
    CHECK(e.gradient_norm() > 0.0);
  }
}

TEST_CASE("trainers are deterministic") {
  Engine eng(7);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -1.0, 1.0);
  Matrix x = wildrefit::testing::gaussian_matrix(40, 2, eng);
  Matrix y = wildrefit::testing::gaussian_matrix(40, 2, eng);
  FixedDesignDataset data(x, y);
  LinearTrainer lt(loss, set);
  SaturatedTrainer st(loss, set);
  CHECK(lt.fit(data) == lt.fit(data));
  CHECK(st.fit(data) == st.fit(data));
  CHECK(rows_in_set(set, lt.fit(data).values));
  CHECK(rows_in_set(set, st.fit(data).values));
  CHECK(st.descriptor().kind == "saturated");
  CHECK(lt.descriptor().kind == "linear");
}

TEST_CASE("make_trainer dispatches on kind") {
  BregmanLoss loss(Potential::squared_l2(1));
  auto set = CompactSet::box(1, -1.0, 1.0);
  TrainerSpec spec;
  spec.kind = "linear";
  spec.max_iters = 77;
  auto t = make_trainer(spec, loss, set);
  CHECK(t->descriptor().kind == "linear");
  CHECK(t->descriptor().hyperparameters.at("max_iters") == 77.0);
  spec.kind = "tree";
  CHECK_THROWS_AS(make_trainer(spec, loss, set), InvalidInput);
}

TEST_CASE("non-expansiveness diagnostic") {
  Engine eng(8);
  BregmanLoss loss(Potential::squared_l2(2));
  auto set = CompactSet::box(2, -10.0, 10.0);
  SaturatedTrainer st(loss, set);
  Matrix fstar = wildrefit::testing::gaussian_matrix(30, 2, eng);
  Matrix x(30, 0);
  SUBCASE("zero noise") {
    auto r = check_nonexpansive(loss, st, x, PredictionMatrix{fstar}, Matrix::Zero(30, 2));
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.holds);
  }
  SUBCASE("interior noise gives lhs = rhs / 2") {
    Matrix u = wildrefit::testing::gaussian_matrix(30, 2, eng, 0.3);
    auto r = check_nonexpansive(loss, st, x, PredictionMatrix{fstar}, u);
    const double msq = u.rowwise().squaredNorm().mean();
    CHECK(r.lhs == doctest::Approx(0.5 * msq).epsilon(1e-12));
    CHECK(r.rhs == doctest::Approx(msq).epsilon(1e-12));
    CHECK(std::abs(r.lhs - 0.5 * r.rhs) <= 1e-9);
    CHECK(r.holds);
  }
}
