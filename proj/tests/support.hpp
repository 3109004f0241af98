#pragma once

#include <cmath>
#include <random>

#include "wildrefit/bregman.hpp"
#include "wildrefit/design.hpp"
#include "wildrefit/rng.hpp"

namespace wildrefit::testing {

// Uniform point strictly inside the domain of a built-in potential.
inline Vector random_domain_point(const Potential& pot, Engine& eng, double margin = 0.0) {
  const int d = pot.dim();
  Vector u(d);
  switch (pot.kind()) {
    case PotentialKind::squared_l2: {
      std::uniform_real_distribution<double> unif(-3.0, 3.0);
      for (int j = 0; j < d; ++j) u(j) = unif(eng);
      break;
    }
    case PotentialKind::sqrt_bernoulli: {
      const double e = pot.parameter() + margin;
      std::uniform_real_distribution<double> unif(e, 1.0 - e);
      for (int j = 0; j < d; ++j) u(j) = unif(eng);
      break;
    }
    case PotentialKind::clipped_simplex_kl: {
      // eta + (1 - d eta) * Dirichlet(1)
      const double eta = pot.parameter() + margin;
      std::exponential_distribution<double> ex(1.0);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += (u(j) = ex(eng));
      u = eta + (1.0 - d * eta) * (u / s).array();
      break;
    }
  }
  return u;
}

inline Matrix random_domain_matrix(const Potential& pot, Eigen::Index n, Engine& eng) {
  Matrix m(n, pot.dim());
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = random_domain_point(pot, eng).transpose();
  return m;
}

inline Matrix gaussian_matrix(Eigen::Index n, Eigen::Index d, Engine& eng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(eng);
  return m;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

inline Potential potential_for(PotentialKind kind, int d) {
  switch (kind) {
    case PotentialKind::squared_l2: return Potential::squared_l2(d);
    case PotentialKind::sqrt_bernoulli: return Potential::sqrt_bernoulli(d, 0.1);
    case PotentialKind::clipped_simplex_kl: return Potential::clipped_simplex_kl(d, 0.05);
  }
  return Potential::squared_l2(d);
}

}  // namespace wildrefit::testing
