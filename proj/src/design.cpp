#include "wildrefit/design.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>

#include "wildrefit/errors.hpp"
#include "wildrefit/rng.hpp"

namespace wildrefit {

FixedDesignDataset::FixedDesignDataset(Matrix inputs, Matrix responses)
    : inputs_(std::move(inputs)), responses_(std::move(responses)) {
  if (responses_.rows() < 1 || responses_.cols() < 1) throw InvalidInput("dataset: need n >= 1 and d >= 1");
  if (inputs_.rows() != responses_.rows()) throw InvalidInput("dataset: inputs and responses disagree on n");
  if (!responses_.allFinite()) throw InvalidInput("dataset: responses contain non-finite entries");
  if (!inputs_.allFinite()) throw InvalidInput("dataset: inputs contain non-finite entries");
}

FixedDesignDataset FixedDesignDataset::with_responses(Matrix responses) const {
  return FixedDesignDataset(inputs_, std::move(responses));
}

CompactSet CompactSet::box(Vector lo, Vector hi) {
  if (lo.size() < 1 || lo.size() != hi.size()) throw InvalidInput("box: bad dimensions");
  if (!lo.allFinite() || !hi.allFinite()) throw InvalidInput("box: bounds must be finite");
  if ((lo.array() >= hi.array()).any()) throw InvalidInput("box: need lo < hi coordinate-wise");
  return CompactSet(Box{std::move(lo), std::move(hi)});
}

CompactSet CompactSet::box(int dim, double lo, double hi) {
  if (dim < 1) throw InvalidInput("box: dim must be >= 1");
  return box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

CompactSet CompactSet::clipped_simplex(int dim, double eta) {
  if (dim < 2) throw InvalidInput("clipped simplex: dim must be >= 2");
  if (!(eta > 0.0 && eta < 1.0 / dim)) throw InvalidInput("clipped simplex: eta must lie in (0, 1/d)");
  return CompactSet(ClippedSimplex{dim, eta});
}

CompactSet default_compact_set(const Potential& potential, double bound) {
  const Region& dom = potential.domain();
  if (const auto* s = std::get_if<ClippedSimplex>(&dom)) return CompactSet::clipped_simplex(s->dim, s->eta);
  const auto& b = std::get<Box>(dom);
  if (region_is_bounded(dom)) return CompactSet::box(b.lo, b.hi);
  return CompactSet::box(potential.dim(), -bound, bound);
}

void require_subset_of_domain(const CompactSet& set, const Potential& potential) {
  if (set.dim() != potential.dim()) throw InvalidInput("compact set and potential disagree on d");
  const Region& dom = potential.domain();
  const Region& reg = set.region();
  bool ok = false;
  if (const auto* sd = std::get_if<ClippedSimplex>(&dom)) {
    if (const auto* sr = std::get_if<ClippedSimplex>(&reg)) ok = sr->eta >= sd->eta;
  } else if (const auto* br = std::get_if<Box>(&reg)) {
    const auto& bd = std::get<Box>(dom);
    ok = (br->lo.array() >= bd.lo.array()).all() && (br->hi.array() <= bd.hi.array()).all();
  }
  if (!ok) throw InvalidInput("compact set is not contained in the domain of " + to_string(potential.kind()));
}

// Separable potential on a box: D_phi(., y) is convex and D_phi(x, .) is monotone away
// from x, so each coordinate's sup sits at a pair of opposite endpoints; phi' is monotone,
// so |phi'| peaks at an endpoint too. For KL on the clipped simplex both sups are convex
// maximizations attained at vertices (one coordinate 1 - (d-1) eta, the rest eta).
double max_divergence_on_set(const BregmanLoss& loss, const CompactSet& set) {
  require_subset_of_domain(set, loss.potential());
  const Potential& phi = loss.potential();
  if (const auto* s = std::get_if<ClippedSimplex>(&set.region())) {
    const double top = 1.0 - (s->dim - 1) * s->eta;
    return (top - s->eta) * std::log(top / s->eta);
  }
  const auto& b = std::get<Box>(set.region());
  double total = 0.0;
  for (Eigen::Index j = 0; j < b.lo.size(); ++j) {
    total += std::max(phi.scalar_divergence(b.lo[j], b.hi[j]), phi.scalar_divergence(b.hi[j], b.lo[j]));
  }
  return total;
}

double max_gradient_norm_on_set(const BregmanLoss& loss, const CompactSet& set) {
  require_subset_of_domain(set, loss.potential());
  const Potential& phi = loss.potential();
  if (const auto* s = std::get_if<ClippedSimplex>(&set.region())) {
    const double top = 1.0 - (s->dim - 1) * s->eta;
    const double a = 1.0 + std::log(top);
    const double b = 1.0 + std::log(s->eta);
    return std::sqrt(a * a + (s->dim - 1) * b * b);
  }
  const auto& b = std::get<Box>(set.region());
  double total = 0.0;
  for (Eigen::Index j = 0; j < b.lo.size(); ++j) {
    const double lo = phi.scalar_derivative(b.lo[j]);
    const double hi = phi.scalar_derivative(b.hi[j]);
    total += std::max(lo * lo, hi * hi);
  }
  return std::sqrt(total);
}

bool rows_in_set(const CompactSet& set, const Matrix& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if (!set.contains(values.row(i).transpose())) return false;
  }
  return true;
}

SignMatrix sample_sign_matrix(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidInput("sign matrix: need n, d >= 1");
  Engine engine = make_engine(seed);
  SignMatrix out{Matrix(n, d), seed};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out.values(i, j) = (engine() >> 63) ? 1.0 : -1.0;
  }
  return out;
}

Vector project(const CompactSet& set, VectorRef z) { return set.project(z); }

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidInput(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                       std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                       std::to_string(b.cols()) + ")");
  }
}

double empirical_discrepancy(const BregmanLoss& loss, const Matrix& f, const Matrix& g) {
  require_same_shape(f, g, "empirical_discrepancy");
  if (f.rows() == 0) throw InvalidInput("empirical_discrepancy: empty matrices");
  double total = 0.0;
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    total += divergence(loss, f.row(i).transpose(), g.row(i).transpose());
  }
  return total / static_cast<double>(f.rows());
}

double empirical_discrepancy(const BregmanLoss& loss, const PredictionMatrix& f, const PredictionMatrix& g) {
  return empirical_discrepancy(loss, f.values, g.values);
}

}  // namespace wildrefit
