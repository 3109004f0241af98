#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wildrefit/design.hpp"
#include "wildrefit/errors.hpp"

namespace wildrefit {

struct WnOptions {
  int max_iter = 400;
  // Relative duality gap below which a solution is flagged as certified.
  double certify_rel_gap = 1e-8;
};

/// Solution of sup { (1/n) sum_i <grad phi(c_i) - grad phi(u_i), z_i> : u_i in C, L_n(c, U) <= r^2 }.
///
/// `value` is attained by the feasible point `argmax` (a certified lower bound);
/// `upper_bound` is the Lagrangian dual value at `lambda` (a certified upper bound).
struct WnSolution {
  double value = 0.0;
  double upper_bound = 0.0;
  double lambda = 0.0;
  double constraint = 0.0;  // L_n(c, argmax)
  bool certified = false;
  Matrix argmax;
};

WnSolution wn_solve(const BregmanLoss& loss, const CompactSet& set, const Matrix& center, const Matrix& z, double r,
                    const WnOptions& opts = {});

// Wild noise complexity W_n(r) for Z = eps .* residues; returns the feasible value.
double wn(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat, const Matrix& z, double r,
          const WnOptions& opts = {});

// Same process with the true noise in place of the residues.
double wn_tilde_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                       const Matrix& noise, const SignMatrix& eps, double r);

// Centered at f_dagger; pass all-ones signs to obtain Z_n(r).
double zn_eps_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fdagger,
                     const Matrix& noise, const SignMatrix& eps, double r);

// A_n: ball radius 3 sqrt(beta/alpha) r around fhat, Z = eps .* (fhat - f*).
double pilot_error_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                          const PredictionMatrix& fstar_preds, const SignMatrix& eps, double r);

// B_n(t) at t = sqrt(log(1/delta)).
double deviation_term(const BregmanLoss& loss, double misspec, double r, double w_inf, Eigen::Index n,
                      Eigen::Index d, double delta);

using WnEvaluator = std::function<double(double)>;

WnEvaluator make_wn_evaluator(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                              const Matrix& z, const WnOptions& opts = {});

struct RadiusSearchOptions {
  double r_max = 0.0;  // required: the diameter scale of C in L_n units
  double grid_ratio = 1.1;
  double rel_tol = 1e-4;
};

/// Smallest r on the geometric grid [log(1/delta)/sqrt(n), r_max] with
/// r^2 >= W_n((2 + 1/log(1/delta)) r), refined by bisection. Requires delta <= e^-9.
double fixed_point_radius(const WnEvaluator& wn_eval, double delta, Eigen::Index n, const RadiusSearchOptions& opts);

// Right-hand side of the first r_hat_n self-bounding inequality, evaluated at r.
double rhat_first_claim_rhs(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r, double delta,
                            Eigen::Index n, double w_inf, Eigen::Index d, double pilot);

// Right-hand side of the convex-class inequality, evaluated at r.
double rhat_convex_claim_rhs(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r, double r_diamond,
                             double delta, Eigen::Index n, double w_inf, Eigen::Index d, double pilot);

struct RhatBound {
  double bound = 0.0;
  // max{r_diamond, W_n(sqrt(beta/alpha)(2 + 1/sqrt(log(1/delta))) r_diamond) / r_diamond}
  double bracket = 0.0;
  std::vector<TracePoint> trace;
};

/// Upper bound on r_hat_n for convex classes: the grid point just past the last r at which
/// r^2 <= rhat_convex_claim_rhs(r) holds, refined by bisection. Any r beyond it violates the
/// inequality, so r_hat_n cannot exceed it on the high-probability event.
RhatBound rhat_bound_convex(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r_diamond, double delta,
                            Eigen::Index n, double w_inf, Eigen::Index d, double pilot,
                            const RadiusSearchOptions& opts);

enum class RadiusMethod { oracle, fixed_point, convex_class_bound };

std::string to_string(RadiusMethod method);
RadiusMethod radius_method_from_string(const std::string& name);

struct RadiusReport {
  double r_hat_n = 0.0;
  double r_diamond_rho = 0.0;
  double r_certified = 0.0;
  RadiusMethod method = RadiusMethod::oracle;
};

// r_max default for radius searches: sqrt of the sup of D_phi over C x C.
double radius_scale(const BregmanLoss& loss, const CompactSet& set);

}  // namespace wildrefit
