#pragma once

#include <variant>

#include "wildrefit/linalg.hpp"

namespace wildrefit {

// Coordinate-wise box; bounds may be infinite for unbounded loss domains.
struct Box {
  Vector lo;
  Vector hi;
};

// {p in R^d : p_j >= eta, sum_j p_j = 1}.
struct ClippedSimplex {
  int dim = 0;
  double eta = 0.0;
};

using Region = std::variant<Box, ClippedSimplex>;

// Slack accepted on domain membership so that projected points count as inside.
inline constexpr double kDomainSlack = 1e-12;
inline constexpr double kSimplexSumSlack = 1e-9;

int region_dim(const Region& region);
bool region_contains(const Region& region, VectorRef z, double slack = kDomainSlack);
bool region_is_bounded(const Region& region);

// Euclidean projection (clamp for boxes, sorted-threshold for the clipped simplex).
Vector project_onto(const Region& region, VectorRef z);

// Transposed Jacobian of project_onto at z applied to g (chain rule through the projection).
Vector project_vjp(const Region& region, VectorRef z, VectorRef g);

// Largest Euclidean distance between two points of a bounded region.
double region_diameter(const Region& region);

}  // namespace wildrefit
