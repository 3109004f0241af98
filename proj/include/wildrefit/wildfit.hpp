#pragma once

#include <cstdint>
#include <vector>

#include "wildrefit/design.hpp"
#include "wildrefit/errors.hpp"
#include "wildrefit/trainer.hpp"

namespace wildrefit {

/// Everything one wild refit produces.
///
/// Invariant: wild_responses = fhat - rho * (signs .* residues) row by row, except
/// for rows that left the loss domain and were projected back (`clipped_rows`).
struct WildRefitResult {
  Matrix responses;         // y_i
  PredictionMatrix fhat;    // A(D_0) on the design
  PredictionMatrix fdiamond;  // A(D_1) on the design
  Matrix wild_responses;    // y_i^diamond
  Matrix residues;          // y_i - fhat(x_i)
  SignMatrix signs;
  double rho = 0.0;
  int clipped_rows = 0;

  // eps_i .* residue_i
  Matrix symmetrized_residues() const { return signs.values.cwiseProduct(residues); }
};

// Wild responses fhat - rho * eps .* residues, with rows outside the loss domain projected
// back onto it. Returns the number of projected rows through `clipped`.
Matrix wild_responses(const Potential& potential, const Matrix& fhat, const Matrix& signs, const Matrix& residues,
                      double rho, int* clipped = nullptr);

// Runs the trainer on the data, draws signs from `seed`, forms the wild responses and refits.
WildRefitResult wild_refit(const Trainer& trainer, const FixedDesignDataset& data, double rho, std::uint64_t seed);

// Second half only, for callers that already hold fhat and the signs (calibration sweeps).
WildRefitResult wild_refit_from_fit(const Trainer& trainer, const FixedDesignDataset& data, PredictionMatrix fhat,
                                    SignMatrix signs, double rho);

// (1/(n rho)) sum l(fhat_i, fdiamond_i) - (1/(n rho)) sum l(ydiamond_i, fdiamond_i)
//   + (1/n) sum beta rho ||eps_i .* residue_i||^2
double wild_optimism(const BregmanLoss& loss, const WildRefitResult& result);

// sqrt(L_n(fhat, fdiamond)).
double wild_radius(const BregmanLoss& loss, const WildRefitResult& result);

struct CalibrationOptions {
  double tol_rel = 1e-3;
  double rho_lo = 1e-8;
  double rho_hi = 1e8;
  double rho_start = 1.0;
  int max_bisect = 200;
  std::uint64_t seed = 0;
};

struct CalibrationResult {
  double rho = 0.0;
  double achieved_radius = 0.0;
  WildRefitResult result;
  std::vector<TracePoint> trace;  // (rho, radius) in evaluation order
  bool used_grid_fallback = false;
};

/// Finds rho with |sqrt(L_n(fhat, fdiamond_rho)) - target| <= tol_rel * target.
///
/// One sign draw (from opts.seed) is shared by every candidate rho, so the radius map is
/// deterministic. The bracket is located by doubling/halving from rho_start; if the map is
/// seen to be non-monotone along the way a geometric grid over [rho_lo, rho_hi] is scanned
/// instead. Bisection then runs inside the bracket.
CalibrationResult calibrate_rho(const Trainer& trainer, const FixedDesignDataset& data, double target_radius,
                                const CalibrationOptions& opts = {});

}  // namespace wildrefit
