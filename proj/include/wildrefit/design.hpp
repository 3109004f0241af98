#pragma once

#include <cstdint>

#include "wildrefit/bregman.hpp"
#include "wildrefit/geometry.hpp"
#include "wildrefit/linalg.hpp"

namespace wildrefit {

/// n design points with an n x d response matrix.
///
/// Inputs are an n x p feature matrix; p may be 0, in which case the design
/// points are opaque and only their indices matter.
class FixedDesignDataset {
 public:
  FixedDesignDataset(Matrix inputs, Matrix responses);

  Eigen::Index n() const noexcept { return responses_.rows(); }
  Eigen::Index d() const noexcept { return responses_.cols(); }
  Eigen::Index p() const noexcept { return inputs_.cols(); }
  const Matrix& inputs() const noexcept { return inputs_; }
  const Matrix& responses() const noexcept { return responses_; }

  // Same design points, new responses.
  FixedDesignDataset with_responses(Matrix responses) const;

 private:
  Matrix inputs_;
  Matrix responses_;
};

/// The compact set C every prediction must lie in.
class CompactSet {
 public:
  static CompactSet box(Vector lo, Vector hi);
  static CompactSet box(int dim, double lo, double hi);
  static CompactSet clipped_simplex(int dim, double eta);

  const Region& region() const noexcept { return region_; }
  int dim() const { return region_dim(region_); }
  bool contains(VectorRef z) const { return region_contains(region_, z); }
  Vector project(VectorRef z) const { return project_onto(region_, z); }
  double diameter() const { return region_diameter(region_); }

 private:
  explicit CompactSet(Region region) : region_(std::move(region)) {}
  Region region_;
};

// Default C for a potential: its domain when bounded, otherwise the box [-bound, bound]^d.
CompactSet default_compact_set(const Potential& potential, double bound = 10.0);

// C must sit inside the loss domain for every divergence on C to be defined.
void require_subset_of_domain(const CompactSet& set, const Potential& potential);

// sup of D_phi over C x C, in closed form for every built-in potential.
double max_divergence_on_set(const BregmanLoss& loss, const CompactSet& set);
// sup of ||grad phi|| over C.
double max_gradient_norm_on_set(const BregmanLoss& loss, const CompactSet& set);

/// A predictor evaluated on the design: row i = f(x_i).
struct PredictionMatrix {
  Matrix values;

  Eigen::Index n() const noexcept { return values.rows(); }
  Eigen::Index d() const noexcept { return values.cols(); }
  Vector row(Eigen::Index i) const { return values.row(i).transpose(); }
  bool operator==(const PredictionMatrix&) const = default;
};

bool rows_in_set(const CompactSet& set, const Matrix& values);

/// Rademacher signs, recorded with the seed that produced them.
struct SignMatrix {
  Matrix values;
  std::uint64_t seed = 0;
};

SignMatrix sample_sign_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

Vector project(const CompactSet& set, VectorRef z);

// L_n(F, G) = (1/n) sum_i D_phi(F_i, G_i).
double empirical_discrepancy(const BregmanLoss& loss, const Matrix& f, const Matrix& g);
double empirical_discrepancy(const BregmanLoss& loss, const PredictionMatrix& f, const PredictionMatrix& g);

void require_same_shape(const Matrix& a, const Matrix& b, const char* what);

}  // namespace wildrefit
