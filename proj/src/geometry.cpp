#include "wildrefit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "overloaded.hpp"
#include "wildrefit/errors.hpp"

namespace wildrefit {

namespace {

using detail::Overloaded;

// Threshold tau with sum_j max(z_j - tau, eta) = 1.
double simplex_threshold(const ClippedSimplex& s, VectorRef z) {
  const double mass = 1.0 - s.dim * s.eta;
  std::vector<double> shifted(z.data(), z.data() + z.size());
  for (double& v : shifted) v -= s.eta;
  std::sort(shifted.begin(), shifted.end(), std::greater<>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < shifted.size(); ++k) {
    cumulative += shifted[k];
    const double candidate = (cumulative - mass) / static_cast<double>(k + 1);
    if (shifted[k] - candidate > 0.0) tau = candidate;
  }
  return tau;
}

}  // namespace

int region_dim(const Region& region) {
  return std::visit(Overloaded{[](const Box& b) { return static_cast<int>(b.lo.size()); },
                               [](const ClippedSimplex& s) { return s.dim; }},
                    region);
}

bool region_contains(const Region& region, VectorRef z, double slack) {
  if (z.size() != region_dim(region)) return false;
  if (!z.allFinite()) return false;
  return std::visit(
      Overloaded{[&](const Box& b) {
                   for (Eigen::Index j = 0; j < z.size(); ++j) {
                     if (z[j] < b.lo[j] - slack || z[j] > b.hi[j] + slack) return false;
                   }
                   return true;
                 },
                 [&](const ClippedSimplex& s) {
                   if (z.minCoeff() < s.eta - slack) return false;
                   return std::abs(z.sum() - 1.0) <= kSimplexSumSlack;
                 }},
      region);
}

bool region_is_bounded(const Region& region) {
  return std::visit(Overloaded{[](const Box& b) { return b.lo.allFinite() && b.hi.allFinite(); },
                               [](const ClippedSimplex&) { return true; }},
                    region);
}

Vector project_onto(const Region& region, VectorRef z) {
  if (z.size() != region_dim(region)) throw InvalidInput("project: dimension mismatch");
  if (!z.allFinite()) throw InvalidInput("project: non-finite point");
  return std::visit(Overloaded{[&](const Box& b) -> Vector { return z.cwiseMax(b.lo).cwiseMin(b.hi); },
                               [&](const ClippedSimplex& s) -> Vector {
                                 const double tau = simplex_threshold(s, z);
                                 Vector p = (z.array() - tau).max(s.eta).matrix();
                                 return p;
                               }},
                    region);
}

Vector project_vjp(const Region& region, VectorRef z, VectorRef g) {
  return std::visit(Overloaded{[&](const Box& b) -> Vector {
                                 Vector out = g;
                                 for (Eigen::Index j = 0; j < z.size(); ++j) {
                                   if (z[j] < b.lo[j] || z[j] > b.hi[j]) out[j] = 0.0;
                                 }
                                 return out;
                               },
                               [&](const ClippedSimplex& s) -> Vector {
                                 const double tau = simplex_threshold(s, z);
                                 Vector out = Vector::Zero(z.size());
                                 double sum = 0.0;
                                 int free = 0;
                                 for (Eigen::Index j = 0; j < z.size(); ++j) {
                                   if (z[j] - tau > s.eta) {
                                     sum += g[j];
                                     ++free;
                                   }
                                 }
                                 if (free == 0) return out;
                                 const double mean = sum / free;
                                 for (Eigen::Index j = 0; j < z.size(); ++j) {
                                   if (z[j] - tau > s.eta) out[j] = g[j] - mean;
                                 }
                                 return out;
                               }},
                    region);
}

double region_diameter(const Region& region) {
  return std::visit(Overloaded{[](const Box& b) { return (b.hi - b.lo).norm(); },
                               [](const ClippedSimplex& s) {
                                 // Two distinct vertices of the clipped simplex.
                                 return std::sqrt(2.0) * (1.0 - s.dim * s.eta);
                               }},
                    region);
}

}  // namespace wildrefit
