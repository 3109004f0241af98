#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "wildrefit/bregman.hpp"
#include "wildrefit/design.hpp"

namespace wildrefit {

struct TrainerDescriptor {
  std::string kind;
  std::map<std::string, double> hyperparameters;
};

/// Black-box training procedure: dataset in, predictions on the design out.
///
/// Implementations must be deterministic given the dataset and their own
/// configuration, and must only emit rows inside the compact set.
class Trainer {
 public:
  Trainer(BregmanLoss loss, CompactSet set);
  virtual ~Trainer() = default;

  virtual PredictionMatrix fit(const FixedDesignDataset& data) const = 0;
  virtual TrainerDescriptor descriptor() const = 0;

  const BregmanLoss& loss() const noexcept { return loss_; }
  const CompactSet& set() const noexcept { return set_; }

 private:
  BregmanLoss loss_;
  CompactSet set_;
};

struct SaturatedOptions {
  int max_iters = 10000;
  double tol = 1e-10;
};

// Pointwise ERM over all functions: row i minimizes z -> D_phi(y_i, z) over C.
PredictionMatrix fit_saturated(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                               const SaturatedOptions& opts = {});

// Single-row version; exposed for tests.
Vector minimize_second_argument(const BregmanLoss& loss, const CompactSet& set, VectorRef y,
                                const SaturatedOptions& opts = {});

class SaturatedTrainer final : public Trainer {
 public:
  SaturatedTrainer(BregmanLoss loss, CompactSet set, SaturatedOptions opts = {});
  PredictionMatrix fit(const FixedDesignDataset& data) const override;
  TrainerDescriptor descriptor() const override;

 private:
  SaturatedOptions opts_;
};

struct LinearOptions {
  int max_iters = 5000;
  double tol = 1e-10;
  std::uint64_t seed = 0;  // recorded only; the descent itself is deterministic
  bool require_convergence = false;
};

/// x -> P_C(Theta^T [1, x]); Theta has an intercept row followed by one row per feature.
struct LinearModel {
  Matrix theta;
  CompactSet set;

  Vector predict(const Vector& x) const;
  Matrix predict_all(const Matrix& inputs) const;
};

struct LinearFit {
  LinearModel model;
  PredictionMatrix predictions;
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
};

// Gradient descent with Armijo backtracking on (1/n) sum_i D_phi(y_i, P_C(Theta^T x_i)).
LinearFit fit_linear_model(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                           const LinearOptions& opts = {});

PredictionMatrix fit_linear_class(const BregmanLoss& loss, const CompactSet& set, const FixedDesignDataset& data,
                                  const LinearOptions& opts = {});

class LinearTrainer final : public Trainer {
 public:
  LinearTrainer(BregmanLoss loss, CompactSet set, LinearOptions opts = {});
  PredictionMatrix fit(const FixedDesignDataset& data) const override;
  LinearFit fit_model(const FixedDesignDataset& data) const;
  TrainerDescriptor descriptor() const override;

 private:
  LinearOptions opts_;
};

struct TrainerSpec {
  std::string kind = "saturated";  // saturated | linear
  int max_iters = 0;               // 0: trainer default
  double tol = 0.0;                // 0: trainer default
  std::string step_policy = "armijo";
  std::uint64_t seed = 0;
};

std::unique_ptr<Trainer> make_trainer(const TrainerSpec& spec, const BregmanLoss& loss, const CompactSet& set);

struct NonexpansiveCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

// Fits f_dagger on (x_i, f*(x_i)) and f_tilde on (x_i, f*(x_i) + u_i), then compares
// L_n(f_dagger, f_tilde) against (1/n) sum_i <grad_1 l(f_tilde_i, f_dagger_i), u_i>.
NonexpansiveCheck check_nonexpansive(const BregmanLoss& loss, const Trainer& trainer, const Matrix& inputs,
                                     const PredictionMatrix& fstar_preds, const Matrix& noise);

}  // namespace wildrefit
