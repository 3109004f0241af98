#include "wildrefit/trainer.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <variant>

#include "wildrefit/errors.hpp"

namespace wildrefit {

Trainer::Trainer(BregmanLoss loss, CompactSet set) : loss_(std::move(loss)), set_(std::move(set)) {
  require_subset_of_domain(set_, loss_.potential());
}

namespace {

// 1-D grid at resolution 1e-5 followed by golden-section refinement around the best cell.
Vector grid_minimize_1d(const BregmanLoss& loss, const CompactSet& set, const Vector& y) {
  const auto& box = std::get<Box>(set.region());
  const double lo = box.lo[0];
  const double hi = box.hi[0];
  const auto objective = [&](double z) { return divergence(loss, y, Vector::Constant(1, z)); };
  const double step = 1e-5;
  const auto cells = static_cast<long>(std::ceil((hi - lo) / step));
  double best_z = lo;
  double best_f = objective(lo);
  for (long k = 1; k <= cells; ++k) {
    const double z = std::min(hi, lo + static_cast<double>(k) * step);
    const double f = objective(z);
    if (f < best_f) {
      best_f = f;
      best_z = z;
    }
  }
  double a = std::max(lo, best_z - step);
  double b = std::min(hi, best_z + step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 80; ++it) {
    const double c = b - ratio * (b - a);
    const double d = a + ratio * (b - a);
    if (objective(c) < objective(d)) b = d; else a = c;
  }
  const double mid = 0.5 * (a + b);
  return Vector::Constant(1, objective(mid) <= best_f ? mid : best_z);
}

}  // namespace

Vector minimize_second_argument(const BregmanLoss& loss, const CompactSet& set, VectorRef y,
                                const SaturatedOptions& opts) {
  if (set.contains(y)) return y;
  loss.potential().require_in_domain(y, "fit_saturated response");

  Vector z = set.project(y);
  double f = divergence(loss, y, z);
  double step = 1.0 / loss.beta();
  double mapping_norm = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    const Vector g = grad2_divergence(loss, y, z);
    bool accepted = false;
    Vector candidate;
    double f_candidate = f;
    for (int bt = 0; bt < 60; ++bt) {
      candidate = set.project(z - step * g);
      const Vector delta = candidate - z;
      f_candidate = divergence(loss, y, candidate);
      if (f_candidate <= f + g.dot(delta) + delta.squaredNorm() / (2.0 * step)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    mapping_norm = (candidate - z).norm() / step;
    z = candidate;
    f = f_candidate;
    if (mapping_norm <= opts.tol) return z;
    step *= 2.0;
  }
  if (y.size() == 1 && std::holds_alternative<Box>(set.region())) return grid_minimize_1d(loss, set, y);
  throw ConvergenceError("fit_saturated: projected gradient did not reach stationarity", z, mapping_norm);
}

PredictionMatrix fit_saturated(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                               const SaturatedOptions& opts) {
  if (data.d() != loss.dim()) throw InvalidInput("fit_saturated: response dimension does not match the loss");
  PredictionMatrix out{Matrix(data.n(), data.d())};
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    out.values.row(i) = minimize_second_argument(loss, set, data.responses().row(i).transpose(), opts).transpose();
  }
  return out;
}

SaturatedTrainer::SaturatedTrainer(BregmanLoss loss, CompactSet set, SaturatedOptions opts)
    : Trainer(std::move(loss), std::move(set)), opts_(opts) {}

PredictionMatrix SaturatedTrainer::fit(const FixedDesignDataset& data) const {
  return fit_saturated(loss(), set(), data, opts_);
}

TrainerDescriptor SaturatedTrainer::descriptor() const {
  return {"saturated", {{"max_iters", static_cast<double>(opts_.max_iters)}, {"tol", opts_.tol}}};
}

// ---------------------------------------------------------------------------
// Linear class

namespace {

Matrix with_intercept(const Matrix& inputs) {
  Matrix design(inputs.rows(), inputs.cols() + 1);
  design.col(0).setOnes();
  if (inputs.cols() > 0) design.rightCols(inputs.cols()) = inputs;
  return design;
}

struct LinearObjective {
  const BregmanLoss& loss;
  const CompactSet& set;
  const Matrix& design;
  const Matrix& responses;

  double value(const Matrix& theta) const {
    const Matrix raw = design * theta;
    double total = 0.0;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      total += divergence(loss, responses.row(i).transpose(), set.project(raw.row(i).transpose()));
    }
    return total / static_cast<double>(raw.rows());
  }

  Matrix gradient(const Matrix& theta) const {
    const Matrix raw = design * theta;
    Matrix row_grads(raw.rows(), raw.cols());
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      const Vector u = raw.row(i).transpose();
      const Vector z = set.project(u);
      const Vector g = grad2_divergence(loss, responses.row(i).transpose(), z);
      row_grads.row(i) = project_vjp(set.region(), u, g).transpose();
    }
    return design.transpose() * row_grads / static_cast<double>(raw.rows());
  }
};

constexpr double kMachineDecrease = 4.0 * std::numeric_limits<double>::epsilon();

Vector barycenter_start(const CompactSet& set, const Matrix& responses) {
  // The unconstrained minimizer of sum_i D_phi(y_i, c) is the arithmetic mean.
  return set.project(responses.colwise().mean().transpose());
}

}  // namespace

Vector LinearModel::predict(const Vector& x) const {
  if (x.size() + 1 != theta.rows()) throw InvalidInput("linear model: feature dimension mismatch");
  Vector raw = theta.row(0).transpose();
  if (x.size() > 0) raw += theta.bottomRows(x.size()).transpose() * x;
  return set.project(raw);
}

Matrix LinearModel::predict_all(const Matrix& inputs) const {
  if (inputs.cols() + 1 != theta.rows()) throw InvalidInput("linear model: feature dimension mismatch");
  const Matrix raw = with_intercept(inputs) * theta;
  Matrix out(raw.rows(), raw.cols());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) out.row(i) = set.project(raw.row(i).transpose()).transpose();
  return out;
}

LinearFit fit_linear_model(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                           const LinearOptions& opts) {
  if (data.d() != loss.dim()) throw InvalidInput("fit_linear_class: response dimension does not match the loss");
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    loss.potential().require_in_domain(data.responses().row(i).transpose(), "fit_linear_class response");
  }
  const Matrix design = with_intercept(data.inputs());
  const LinearObjective objective{loss, set, design, data.responses()};

  Matrix theta = Matrix::Zero(design.cols(), data.d());
  theta.row(0) = barycenter_start(set, data.responses()).transpose();

  LinearFit fit{LinearModel{theta, set}, {}, {}, 0, false};
  double value = objective.value(theta);
  fit.objective_trace.push_back(value);
  double step = 1.0 / loss.beta();
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const Matrix grad = objective.gradient(theta);
    const double grad_sq = grad.squaredNorm();
    // The second test stops once a 1/beta step could no longer change the objective in
    // floating point: stationary to machine precision.
    if (std::sqrt(grad_sq) <= opts.tol ||
        grad_sq / (2.0 * loss.beta()) <= kMachineDecrease * std::max(std::abs(value), 1e-300)) {
      fit.converged = true;
      break;
    }
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      const Matrix candidate = theta - step * grad;
      const double candidate_value = objective.value(candidate);
      if (!std::isfinite(candidate_value)) {
        throw ConvergenceError("fit_linear_class: objective became non-finite",
                               Eigen::Map<const Vector>(theta.data(), theta.size()), std::sqrt(grad_sq),
                               fit.objective_trace);
      }
      if (candidate_value <= value - 0.5 * step * grad_sq && candidate_value < value) {
        theta = candidate;
        value = candidate_value;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    fit.objective_trace.push_back(value);
    if (!accepted) break;  // no descent step left at machine precision
    step *= 2.0;
  }
  fit.iterations = it;
  if (!fit.converged) {
    const double grad_norm = objective.gradient(theta).norm();
    fit.converged = grad_norm <= opts.tol;
    if (!fit.converged && opts.require_convergence) {
      throw ConvergenceError("fit_linear_class: gradient norm " + std::to_string(grad_norm) +
                                 " above tolerance after " + std::to_string(it) + " iterations",
                             Eigen::Map<const Vector>(theta.data(), theta.size()), grad_norm, fit.objective_trace);
    }
  }
  fit.model.theta = theta;
  fit.predictions.values = fit.model.predict_all(data.inputs());
  return fit;
}

PredictionMatrix fit_linear_class(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                                  const LinearOptions& opts) {
  return fit_linear_model(loss, set, data, opts).predictions;
}

LinearTrainer::LinearTrainer(BregmanLoss loss, CompactSet set, LinearOptions opts)
    : Trainer(std::move(loss), std::move(set)), opts_(opts) {}

PredictionMatrix LinearTrainer::fit(const FixedDesignDataset& data) const {
  return fit_linear_class(loss(), set(), data, opts_);
}

LinearFit LinearTrainer::fit_model(const FixedDesignDataset& data) const {
  return fit_linear_model(loss(), set(), data, opts_);
}

TrainerDescriptor LinearTrainer::descriptor() const {
  return {"linear",
          {{"max_iters", static_cast<double>(opts_.max_iters)},
           {"tol", opts_.tol},
           {"seed", static_cast<double>(opts_.seed)},
           {"require_convergence", opts_.require_convergence ? 1.0 : 0.0}}};
}

std::unique_ptr<Trainer> make_trainer(const TrainerSpec& spec, const BregmanLoss& loss, const CompactSet& set) {
  if (spec.step_policy != "armijo") throw InvalidInput("unknown step policy '" + spec.step_policy + "'");
  if (spec.kind == "saturated") {
    SaturatedOptions opts;
    if (spec.max_iters > 0) opts.max_iters = spec.max_iters;
    if (spec.tol > 0.0) opts.tol = spec.tol;
    return std::make_unique<SaturatedTrainer>(loss, set, opts);
  }
  if (spec.kind == "linear") {
    LinearOptions opts;
    if (spec.max_iters > 0) opts.max_iters = spec.max_iters;
    if (spec.tol > 0.0) opts.tol = spec.tol;
    opts.seed = spec.seed;
    return std::make_unique<LinearTrainer>(loss, set, opts);
  }
  throw InvalidInput("unknown trainer kind '" + spec.kind + "'");
}

NonexpansiveCheck check_nonexpansive(const BregmanLoss& loss, const Trainer& trainer, const Matrix& inputs,
                                     const PredictionMatrix& fstar_preds, const Matrix& noise) {
  require_same_shape(fstar_preds.values, noise, "check_nonexpansive");
  const FixedDesignDataset clean(inputs, fstar_preds.values);
  const FixedDesignDataset noisy(inputs, fstar_preds.values + noise);
  const PredictionMatrix dagger = trainer.fit(clean);
  const PredictionMatrix tilde = trainer.fit(noisy);

  NonexpansiveCheck out;
  out.lhs = empirical_discrepancy(loss, dagger, tilde);
  // Oriented as grad phi(f_tilde) - grad phi(f_dagger): with the opposite orientation the
  // right-hand side is -mean ||u||^2 for the exact pointwise fit and the property never holds.
  double inner = 0.0;
  for (Eigen::Index i = 0; i < noise.rows(); ++i) {
    inner += grad1_divergence(loss, tilde.row(i), dagger.row(i)).dot(noise.row(i).transpose());
  }
  out.rhs = inner / static_cast<double>(noise.rows());
  out.holds = out.lhs <= out.rhs + 1e-9;
  return out;
}

}  // namespace wildrefit
