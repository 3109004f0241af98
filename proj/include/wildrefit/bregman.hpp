#pragma once

#include <string>

#include "wildrefit/geometry.hpp"
#include "wildrefit/linalg.hpp"

namespace wildrefit {

enum class PotentialKind { squared_l2, sqrt_bernoulli, clipped_simplex_kl };

std::string to_string(PotentialKind kind);
PotentialKind potential_kind_from_string(const std::string& name);

// Configuration-file view of a potential: kind plus its one scalar parameter.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::squared_l2;
  double eps0 = 0.1;  // sqrt_bernoulli clipping level
  double eta0 = 0.1;  // clipped_simplex_kl floor
};

/// Convex generator phi with certified curvature constants on a declared domain.
///
/// All built-ins are coordinate-separable or have a diagonal Hessian, which the
/// solvers downstream rely on. Evaluating outside `domain()` throws InvalidInput:
/// (alpha, beta) are only certified there.
class Potential {
 public:
  static Potential squared_l2(int dim);
  static Potential sqrt_bernoulli(int dim, double eps0);
  static Potential clipped_simplex_kl(int dim, double eta0);

  PotentialKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  // eps0 for sqrt_bernoulli, eta0 for clipped_simplex_kl, 0 otherwise.
  double parameter() const noexcept { return parameter_; }
  const Region& domain() const noexcept { return domain_; }
  PotentialSpec spec() const;

  bool in_domain(VectorRef u) const;
  void require_in_domain(VectorRef u, const char* what) const;

  double value(VectorRef u) const;
  Vector gradient(VectorRef u) const;
  Vector hessian_diagonal(VectorRef u) const;

  // Coordinate-separable potentials on boxes admit closed-form mirror maps.
  bool separable() const noexcept { return kind_ != PotentialKind::clipped_simplex_kl; }
  double scalar_value(double p) const;
  double scalar_derivative(double p) const;
  double scalar_divergence(double x, double y) const;

 private:
  Potential(PotentialKind kind, int dim, double alpha, double beta, double parameter, Region domain);

  PotentialKind kind_;
  int dim_;
  double alpha_;
  double beta_;
  double parameter_;
  Region domain_;
};

Potential builtin_potential(const PotentialSpec& spec, int dim);

/// l(x, y) = D_phi(x, y), with quasi-triangle constant c0 = sqrt(beta / alpha).
class BregmanLoss {
 public:
  explicit BregmanLoss(Potential potential);

  const Potential& potential() const noexcept { return potential_; }
  double c0() const noexcept { return c0_; }
  double alpha() const noexcept { return potential_.alpha(); }
  double beta() const noexcept { return potential_.beta(); }
  int dim() const noexcept { return potential_.dim(); }

 private:
  Potential potential_;
  double c0_;
};

// phi(x) - phi(y) - <grad phi(y), x - y>.
double divergence(const BregmanLoss& loss, VectorRef x, VectorRef y);

// Gradient in the first argument: grad phi(x) - grad phi(y).
Vector grad1_divergence(const BregmanLoss& loss, VectorRef x, VectorRef y);

// Gradient in the second argument: Hess phi(y) (y - x).
Vector grad2_divergence(const BregmanLoss& loss, VectorRef x, VectorRef y);

}  // namespace wildrefit
