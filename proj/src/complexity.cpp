#include "wildrefit/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <variant>

namespace wildrefit {
namespace {

constexpr double kLambdaFloor = 1e-300;
constexpr double kLambdaCeil = 1e300;

// Maximizer of sum_j c_j log u_j over the clipped simplex {u_j >= eta, sum u = 1}.
// Coordinates with c_j <= 0 sit at eta whenever some c_j > 0 can absorb the mass; the
// positive ones are water-filled as u_j = max(eta, c_j / mu). With no positive
// coefficient the objective is convex and the best vertex wins.
void kl_row_maximizer(const Vector& c, double eta, Eigen::Ref<Vector> u) {
  const Eigen::Index d = c.size();
  std::vector<Eigen::Index> pos;
  for (Eigen::Index j = 0; j < d; ++j)
    if (c[j] > 0.0) pos.push_back(j);
  u.setConstant(eta);
  if (pos.empty()) {
    Eigen::Index k = 0;
    c.maxCoeff(&k);
    u[k] = 1.0 - static_cast<double>(d - 1) * eta;
    return;
  }
  std::sort(pos.begin(), pos.end(), [&](Eigen::Index a, Eigen::Index b) { return c[a] > c[b]; });
  const auto m = static_cast<Eigen::Index>(pos.size());
  const double mass = 1.0 - static_cast<double>(d - m) * eta;
  double csum = 0.0;
  for (Eigen::Index k = 1; k <= m; ++k) {
    csum += c[pos[k - 1]];
    const double mu = csum / (mass - static_cast<double>(m - k) * eta);
    const bool top_free = c[pos[k - 1]] / mu > eta;
    const bool rest_clamped = k == m || c[pos[k]] / mu <= eta;
    if ((top_free && rest_clamped) || k == m) {
      for (Eigen::Index i = 0; i < k; ++i) u[pos[i]] = c[pos[i]] / mu;
      return;
    }
  }
}

class WnProblem {
 public:
  WnProblem(const BregmanLoss& loss, const CompactSet& set, const Matrix& center, const Matrix& z)
      : phi_(loss.potential()), set_(set), center_(center), z_(z) {
    require_subset_of_domain(set, phi_);
    require_same_shape(center, z, "wn: center and Z");
    if (center.cols() != phi_.dim()) throw InvalidInput("wn: column count differs from the loss dimension");
    if (!z.allFinite()) throw InvalidInput("wn: Z has non-finite entries");
    if (!rows_in_set(set, center)) throw InvalidInput("wn: center rows must lie in the compact set");
    const Eigen::Index d = center.cols();
    grad_center_.resize(center.rows(), d);
    for (Eigen::Index i = 0; i < center.rows(); ++i)
      for (Eigen::Index j = 0; j < d; ++j) grad_center_(i, j) = phi_.scalar_derivative(center(i, j));
  }

  Eigen::Index n() const { return center_.rows(); }

  // Row-wise maximizer of the Lagrangian <grad phi(c) - grad phi(u), z> - lambda D(c, u).
  // lambda = 0 gives the unconstrained maximizer over C^n.
  Matrix maximizer(double lambda) const {
    Matrix u(center_.rows(), center_.cols());
    if (const auto* s = std::get_if<ClippedSimplex>(&set_.region())) {
      Vector c(center_.cols());
      for (Eigen::Index i = 0; i < center_.rows(); ++i) {
        c = lambda * center_.row(i).transpose() - z_.row(i).transpose();
        Vector row(center_.cols());
        kl_row_maximizer(c, s->eta, row);
        u.row(i) = row.transpose();
      }
      return u;
    }
    const auto& b = std::get<Box>(set_.region());
    for (Eigen::Index i = 0; i < center_.rows(); ++i) {
      for (Eigen::Index j = 0; j < center_.cols(); ++j) {
        const double zij = z_(i, j);
        double v = center_(i, j);
        if (lambda > 0.0) {
          v -= zij / lambda;
        } else if (zij > 0.0) {
          v = b.lo[j];
        } else if (zij < 0.0) {
          v = b.hi[j];
        }
        u(i, j) = std::clamp(v, b.lo[j], b.hi[j]);
      }
    }
    return u;
  }

  double objective(const Matrix& u) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      for (Eigen::Index j = 0; j < u.cols(); ++j)
        total += (grad_center_(i, j) - phi_.scalar_derivative(u(i, j))) * z_(i, j);
    return total / static_cast<double>(u.rows());
  }

  double constraint(const Matrix& u) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < u.rows(); ++i)
      for (Eigen::Index j = 0; j < u.cols(); ++j) total += phi_.scalar_divergence(center_(i, j), u(i, j));
    return std::max(0.0, total) / static_cast<double>(u.rows());
  }

 private:
  const Potential& phi_;
  const CompactSet& set_;
  const Matrix& center_;
  const Matrix& z_;
  Matrix grad_center_;
};

WnSolution finish(const WnProblem& prob, Matrix u, double lambda, double target, const WnOptions& opts) {
  WnSolution sol;
  sol.lambda = lambda;
  sol.constraint = prob.constraint(u);
  sol.value = prob.objective(u);
  sol.upper_bound = sol.value + lambda * std::max(0.0, target - sol.constraint);
  sol.certified = sol.upper_bound - sol.value <= opts.certify_rel_gap * std::max(1e-300, std::abs(sol.upper_bound));
  sol.argmax = std::move(u);
  return sol;
}

double log_delta_inv(double delta, bool require_small) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (require_small && delta > std::exp(-9.0) * (1.0 + 1e-12))
    throw InvalidInput("delta must be at most e^-9 for the r_hat_n bounds");
  return std::log(1.0 / delta);
}

void require_finite_positive(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) throw InvalidInput(std::string(what) + " must be positive and finite");
}

}  // namespace

WnSolution wn_solve(const BregmanLoss& loss, const CompactSet& set, const Matrix& center, const Matrix& z, double r,
                    const WnOptions& opts) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidInput("wn: radius must be finite and >= 0");
  WnProblem prob(loss, set, center, z);
  const double target = r * r;
  if (r == 0.0 || z.isZero(0.0)) return finish(prob, center, 0.0, target, opts);

  Matrix free = prob.maximizer(0.0);
  if (prob.constraint(free) <= target) return finish(prob, std::move(free), 0.0, target, opts);

  // Bracket lambda: g(lambda) = L_n(center, U(lambda)) decreases in lambda.
  double hi = 1.0;
  while (prob.constraint(prob.maximizer(hi)) > target) {
    hi *= 16.0;
    if (hi > kLambdaCeil) throw InvalidInput("wn: radius too small to resolve");
  }
  double lo = hi / 16.0;
  while (lo > kLambdaFloor && prob.constraint(prob.maximizer(lo)) <= target) {
    hi = lo;
    lo /= 16.0;
  }
  for (int it = 0; it < opts.max_iter && hi / lo - 1.0 > 1e-15; ++it) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (!(mid > lo && mid < hi)) break;
    if (prob.constraint(prob.maximizer(mid)) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return finish(prob, prob.maximizer(hi), hi, target, opts);
}

double wn(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat, const Matrix& z, double r,
          const WnOptions& opts) {
  return wn_solve(loss, set, fhat.values, z, r, opts).value;
}

double wn_tilde_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                       const Matrix& noise, const SignMatrix& eps, double r) {
  require_same_shape(noise, eps.values, "wn_tilde: noise and signs");
  return wn(loss, set, fhat, eps.values.cwiseProduct(noise), r);
}

double zn_eps_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fdagger,
                     const Matrix& noise, const SignMatrix& eps, double r) {
  require_same_shape(noise, eps.values, "zn_eps: noise and signs");
  return wn(loss, set, fdagger, eps.values.cwiseProduct(noise), r);
}

double pilot_error_oracle(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                          const PredictionMatrix& fstar_preds, const SignMatrix& eps, double r) {
  require_same_shape(fhat.values, fstar_preds.values, "pilot: fhat and f*");
  require_same_shape(fhat.values, eps.values, "pilot: fhat and signs");
  if (!(r >= 0.0)) throw InvalidInput("pilot: radius must be >= 0");
  const Matrix z = eps.values.cwiseProduct(fhat.values - fstar_preds.values);
  return wn(loss, set, fhat, z, 3.0 * loss.c0() * r);
}

double deviation_term(const BregmanLoss& loss, double misspec, double r, double w_inf, Eigen::Index n,
                      Eigen::Index d, double delta) {
  const double t = std::sqrt(log_delta_inv(delta, false));
  if (!(misspec >= 0.0) || !(r >= 0.0) || !(w_inf >= 0.0)) throw InvalidInput("deviation: inputs must be >= 0");
  if (n < 1 || d < 1) throw InvalidInput("deviation: n and d must be positive");
  const double a = loss.alpha();
  const double b = loss.beta();
  const double num = (misspec + 5.0 * r) * 2.0 * w_inf * std::max(std::pow(b, 1.5), b * b) *
                     std::sqrt(static_cast<double>(d)) * t;
  return num / (std::min(std::pow(a, 1.5), a) * std::sqrt(static_cast<double>(n)));
}

WnEvaluator make_wn_evaluator(const BregmanLoss& loss, const CompactSet& set, const PredictionMatrix& fhat,
                              const Matrix& z, const WnOptions& opts) {
  return [loss, set, fhat, z, opts](double r) { return wn(loss, set, fhat, z, r, opts); };
}

double fixed_point_radius(const WnEvaluator& wn_eval, double delta, Eigen::Index n, const RadiusSearchOptions& opts) {
  const double ld = log_delta_inv(delta, true);
  if (n < 1) throw InvalidInput("fixed_point_radius: n must be positive");
  require_finite_positive(opts.r_max, "fixed_point_radius: r_max");
  if (!(opts.grid_ratio > 1.0)) throw InvalidInput("fixed_point_radius: grid ratio must exceed 1");
  const double c = 2.0 + 1.0 / ld;
  std::vector<TracePoint> trace;
  auto passes = [&](double r) {
    const double w = wn_eval(c * r);
    trace.push_back({r, w});
    return r * r >= w;
  };

  const double r_min = ld / std::sqrt(static_cast<double>(n));
  if (passes(r_min)) return r_min;
  double fail = r_min;
  double pass = 0.0;
  while (fail < opts.r_max) {
    const double r = std::min(fail * opts.grid_ratio, opts.r_max);
    if (passes(r)) {
      pass = r;
      break;
    }
    fail = r;
  }
  if (pass == 0.0)
    throw UnboundedRadiusError("fixed_point_radius: no radius up to r_max satisfies r^2 >= W_n(c r)", trace);
  while ((pass - fail) > opts.rel_tol * pass) {
    const double mid = 0.5 * (fail + pass);
    if (passes(mid)) {
      pass = mid;
    } else {
      fail = mid;
    }
  }
  return pass;
}

double rhat_first_claim_rhs(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r, double delta,
                            Eigen::Index n, double w_inf, Eigen::Index d, double pilot) {
  const double ld = log_delta_inv(delta, true);
  const double kappa = 6.0 * w_inf * std::pow(loss.beta(), 1.5) * std::sqrt(static_cast<double>(d)) /
                       (loss.alpha() * std::sqrt(ld));
  const double head = std::max(ld * ld / static_cast<double>(n), wn_eval((2.0 + 1.0 / ld) * r));
  return head + r * r * kappa + pilot;
}

double rhat_convex_claim_rhs(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r, double r_diamond,
                             double delta, Eigen::Index n, double w_inf, Eigen::Index d, double pilot) {
  const double ld = log_delta_inv(delta, true);
  require_finite_positive(r_diamond, "rhat bound: r_diamond");
  const double kappa = 6.0 * w_inf * std::pow(loss.beta(), 1.5) * std::sqrt(static_cast<double>(d)) /
                       (loss.alpha() * std::sqrt(ld));
  const double scale = loss.c0() * (2.0 + 1.0 / std::sqrt(ld));
  const double head = std::max({r_diamond * r_diamond, ld * ld / static_cast<double>(n),
                                (r / r_diamond) * wn_eval(scale * r)});
  return head + r * r * kappa + pilot;
}

RhatBound rhat_bound_convex(const BregmanLoss& loss, const WnEvaluator& wn_eval, double r_diamond, double delta,
                            Eigen::Index n, double w_inf, Eigen::Index d, double pilot,
                            const RadiusSearchOptions& opts) {
  const double ld = log_delta_inv(delta, true);
  require_finite_positive(r_diamond, "rhat_bound_convex: r_diamond");
  require_finite_positive(opts.r_max, "rhat_bound_convex: r_max");
  if (!(pilot >= 0.0) || !(w_inf >= 0.0)) throw InvalidInput("rhat_bound_convex: pilot and w_inf must be >= 0");
  RhatBound out;
  const double scale = loss.c0() * (2.0 + 1.0 / std::sqrt(ld));
  out.bracket = std::max(r_diamond, wn_eval(scale * r_diamond) / r_diamond);

  auto holds = [&](double r) {
    const double rhs = rhat_convex_claim_rhs(loss, wn_eval, r, r_diamond, delta, n, w_inf, d, pilot);
    out.trace.push_back({r, rhs});
    return r * r <= rhs;
  };

  // The inequality holds at small r; find where it stops holding for good on the grid.
  const double r0 = std::max(r_diamond, ld / std::sqrt(static_cast<double>(n)));
  const double r_top = std::max(opts.r_max, r0);
  double last_hold = 0.0;
  double first_fail = 0.0;
  double r = r0;
  bool prev_held = true;
  for (;;) {
    const bool h = holds(r);
    if (h) {
      last_hold = r;
    } else if (prev_held) {
      first_fail = r;
    }
    prev_held = h;
    if (r >= r_top) break;
    r = std::min(r * opts.grid_ratio, r_top);
  }
  if (prev_held) throw SearchError("rhat_bound_convex: inequality still holds at r_max", out.trace);
  if (last_hold == 0.0) {
    out.bound = r0;
    return out;
  }
  double lo = last_hold;
  double hi = first_fail;
  while (hi - lo > opts.rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (holds(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  out.bound = hi;
  return out;
}

std::string to_string(RadiusMethod method) {
  switch (method) {
    case RadiusMethod::oracle: return "oracle";
    case RadiusMethod::fixed_point: return "fixed_point";
    case RadiusMethod::convex_class_bound: return "convex_class_bound";
  }
  return "oracle";
}

RadiusMethod radius_method_from_string(const std::string& name) {
  if (name == "oracle") return RadiusMethod::oracle;
  if (name == "fixed_point" || name == "fixed-point") return RadiusMethod::fixed_point;
  if (name == "convex_class_bound" || name == "convex-class") return RadiusMethod::convex_class_bound;
  throw InvalidInput("unknown radius method: " + name);
}

double radius_scale(const BregmanLoss& loss, const CompactSet& set) {
  return std::sqrt(max_divergence_on_set(loss, set));
}

}  // namespace wildrefit
