#include "wildrefit/bregman.hpp"

#include <cmath>
#include <limits>

#include "wildrefit/errors.hpp"

namespace wildrefit {

std::string to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::squared_l2: return "squared_l2";
    case PotentialKind::sqrt_bernoulli: return "sqrt_bernoulli";
    case PotentialKind::clipped_simplex_kl: return "clipped_simplex_kl";
  }
  return "unknown";
}

PotentialKind potential_kind_from_string(const std::string& name) {
  if (name == "squared_l2") return PotentialKind::squared_l2;
  if (name == "sqrt_bernoulli") return PotentialKind::sqrt_bernoulli;
  if (name == "clipped_simplex_kl") return PotentialKind::clipped_simplex_kl;
  throw InvalidInput("unknown potential kind '" + name + "'");
}

Potential::Potential(PotentialKind kind, int dim, double alpha, double beta, double parameter,
                     Region domain)
    : kind_(kind), dim_(dim), alpha_(alpha), beta_(beta), parameter_(parameter), domain_(std::move(domain)) {}

Potential Potential::squared_l2(int dim) {
  if (dim < 1) throw InvalidInput("squared_l2: dim must be >= 1");
  const double inf = std::numeric_limits<double>::infinity();
  return Potential(PotentialKind::squared_l2, dim, 1.0, 1.0, 0.0,
                   Box{Vector::Constant(dim, -inf), Vector::Constant(dim, inf)});
}

// phi''(p) = p^{-3/2}/4 + (1-p)^{-3/2}/4 lies in [sqrt 2, 1/(2 eps0^{3/2})] on [eps0, 1-eps0].
Potential Potential::sqrt_bernoulli(int dim, double eps0) {
  if (dim < 1) throw InvalidInput("sqrt_bernoulli: dim must be >= 1");
  if (!(eps0 > 0.0 && eps0 < 0.5)) throw InvalidInput("sqrt_bernoulli: eps0 must lie in (0, 0.5)");
  return Potential(PotentialKind::sqrt_bernoulli, dim, std::sqrt(2.0), 1.0 / (2.0 * std::pow(eps0, 1.5)), eps0,
                   Box{Vector::Constant(dim, eps0), Vector::Constant(dim, 1.0 - eps0)});
}

// Hessian diag(1/p_j) with eta0 <= p_j <= 1.
Potential Potential::clipped_simplex_kl(int dim, double eta0) {
  if (dim < 2) throw InvalidInput("clipped_simplex_kl: dim must be >= 2");
  if (!(eta0 > 0.0 && eta0 < 1.0 / dim)) throw InvalidInput("clipped_simplex_kl: eta0 must lie in (0, 1/d)");
  return Potential(PotentialKind::clipped_simplex_kl, dim, 1.0, 1.0 / eta0, eta0, ClippedSimplex{dim, eta0});
}

Potential builtin_potential(const PotentialSpec& spec, int dim) {
  switch (spec.kind) {
    case PotentialKind::squared_l2: return Potential::squared_l2(dim);
    case PotentialKind::sqrt_bernoulli: return Potential::sqrt_bernoulli(dim, spec.eps0);
    case PotentialKind::clipped_simplex_kl: return Potential::clipped_simplex_kl(dim, spec.eta0);
  }
  throw InvalidInput("unknown potential kind");
}

PotentialSpec Potential::spec() const {
  PotentialSpec s;
  s.kind = kind_;
  if (kind_ == PotentialKind::sqrt_bernoulli) s.eps0 = parameter_;
  if (kind_ == PotentialKind::clipped_simplex_kl) s.eta0 = parameter_;
  return s;
}

bool Potential::in_domain(VectorRef u) const { return region_contains(domain_, u); }

void Potential::require_in_domain(VectorRef u, const char* what) const {
  if (!in_domain(u)) {
    throw InvalidInput(std::string(what) + ": point outside the domain of " + to_string(kind_));
  }
}

// Clamp to the mathematical domain so slack-admitted boundary points evaluate cleanly.
namespace {
double clamp_unit(double p) { return std::min(1.0, std::max(0.0, p)); }
}  // namespace

double Potential::scalar_value(double p) const {
  switch (kind_) {
    case PotentialKind::squared_l2: return 0.5 * p * p;
    case PotentialKind::sqrt_bernoulli: {
      p = clamp_unit(p);
      return -std::sqrt(p) - std::sqrt(1.0 - p);
    }
    case PotentialKind::clipped_simplex_kl: return p > 0.0 ? p * std::log(p) : 0.0;
  }
  return 0.0;
}

double Potential::scalar_derivative(double p) const {
  switch (kind_) {
    case PotentialKind::squared_l2: return p;
    case PotentialKind::sqrt_bernoulli: {
      p = clamp_unit(p);
      return -0.5 / std::sqrt(p) + 0.5 / std::sqrt(1.0 - p);
    }
    case PotentialKind::clipped_simplex_kl: return 1.0 + std::log(p);
  }
  return 0.0;
}

double Potential::scalar_divergence(double x, double y) const {
  switch (kind_) {
    case PotentialKind::squared_l2: return 0.5 * (x - y) * (x - y);
    case PotentialKind::sqrt_bernoulli: {
      // Closed form avoids the cancellation in phi(x) - phi(y) - phi'(y)(x - y).
      const double p1 = clamp_unit(x);
      const double p2 = clamp_unit(y);
      const double a = std::sqrt(p1) - std::sqrt(p2);
      const double b = std::sqrt(1.0 - p1) - std::sqrt(1.0 - p2);
      return a * a / (2.0 * std::sqrt(p2)) + b * b / (2.0 * std::sqrt(1.0 - p2));
    }
    case PotentialKind::clipped_simplex_kl: return x * std::log(x / y) - x + y;
  }
  return 0.0;
}

double Potential::value(VectorRef u) const {
  require_in_domain(u, "value");
  double total = 0.0;
  for (Eigen::Index j = 0; j < u.size(); ++j) total += scalar_value(u[j]);
  return total;
}

Vector Potential::gradient(VectorRef u) const {
  require_in_domain(u, "gradient");
  Vector g(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) g[j] = scalar_derivative(u[j]);
  return g;
}

Vector Potential::hessian_diagonal(VectorRef u) const {
  require_in_domain(u, "hessian");
  Vector h(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double p = u[j];
    switch (kind_) {
      case PotentialKind::squared_l2: h[j] = 1.0; break;
      case PotentialKind::sqrt_bernoulli: {
        const double q = clamp_unit(p);
        h[j] = 0.25 * std::pow(q, -1.5) + 0.25 * std::pow(1.0 - q, -1.5);
        break;
      }
      case PotentialKind::clipped_simplex_kl: h[j] = 1.0 / p; break;
    }
  }
  return h;
}

BregmanLoss::BregmanLoss(Potential potential)
    : potential_(std::move(potential)), c0_(std::sqrt(potential_.beta() / potential_.alpha())) {}

namespace {
void require_pair(const BregmanLoss& loss, VectorRef x, VectorRef y) {
  loss.potential().require_in_domain(x, "divergence (first argument)");
  loss.potential().require_in_domain(y, "divergence (second argument)");
}
}  // namespace

double divergence(const BregmanLoss& loss, VectorRef x, VectorRef y) {
  require_pair(loss, x, y);
  double total = 0.0;
  switch (loss.potential().kind()) {
    case PotentialKind::squared_l2: return 0.5 * (x - y).squaredNorm();
    case PotentialKind::sqrt_bernoulli:
      for (Eigen::Index j = 0; j < x.size(); ++j) total += loss.potential().scalar_divergence(x[j], y[j]);
      return total;
    case PotentialKind::clipped_simplex_kl:
      for (Eigen::Index j = 0; j < x.size(); ++j) total += loss.potential().scalar_divergence(x[j], y[j]);
      return std::max(0.0, total);
  }
  return total;
}

Vector grad1_divergence(const BregmanLoss& loss, VectorRef x, VectorRef y) {
  require_pair(loss, x, y);
  return loss.potential().gradient(x) - loss.potential().gradient(y);
}

Vector grad2_divergence(const BregmanLoss& loss, VectorRef x, VectorRef y) {
  require_pair(loss, x, y);
  return loss.potential().hessian_diagonal(y).cwiseProduct(y - x);
}

}  // namespace wildrefit
