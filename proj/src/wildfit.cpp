#include "wildrefit/wildfit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "wildrefit/rng.hpp"

namespace wildrefit {
namespace {

std::string short_number(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

double largest_radius(const std::vector<TracePoint>& trace) {
  double best = 0.0;
  for (const auto& t : trace) best = std::max(best, t.value);
  return best;
}

}  // namespace

Matrix wild_responses(const Potential& potential, const Matrix& fhat, const Matrix& signs, const Matrix& residues,
                      double rho, int* clipped) {
  require_same_shape(fhat, signs, "wild_responses");
  require_same_shape(fhat, residues, "wild_responses");
  Matrix out = fhat - rho * signs.cwiseProduct(residues);
  int count = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (!potential.in_domain(out.row(i).transpose())) {
      out.row(i) = project_onto(potential.domain(), out.row(i).transpose()).transpose();
      ++count;
    }
  }
  if (clipped != nullptr) *clipped = count;
  return out;
}

WildRefitResult wild_refit_from_fit(const Trainer& trainer, const FixedDesignDataset& data, PredictionMatrix fhat,
                                    SignMatrix signs, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("wild_refit: rho must be positive and finite");
  require_same_shape(fhat.values, data.responses(), "wild_refit");
  require_same_shape(signs.values, data.responses(), "wild_refit");

  WildRefitResult out;
  out.responses = data.responses();
  out.residues = data.responses() - fhat.values;
  out.rho = rho;
  out.wild_responses =
      wild_responses(trainer.loss().potential(), fhat.values, signs.values, out.residues, rho, &out.clipped_rows);
  out.fhat = std::move(fhat);
  out.signs = std::move(signs);
  try {
    out.fdiamond = trainer.fit(data.with_responses(out.wild_responses));
  } catch (const std::exception& e) {
    throw StageError("refit", e.what());
  }
  return out;
}

WildRefitResult wild_refit(const Trainer& trainer, const FixedDesignDataset& data, double rho, std::uint64_t seed) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInput("wild_refit: rho must be positive and finite");
  PredictionMatrix fhat;
  try {
    fhat = trainer.fit(data);
  } catch (const std::exception& e) {
    throw StageError("initial fit", e.what());
  }
  SignMatrix signs = sample_sign_matrix(data.n(), data.d(), seed);
  return wild_refit_from_fit(trainer, data, std::move(fhat), std::move(signs), rho);
}

double wild_radius(const BregmanLoss& loss, const WildRefitResult& result) {
  return std::sqrt(empirical_discrepancy(loss, result.fhat, result.fdiamond));
}

double wild_optimism(const BregmanLoss& loss, const WildRefitResult& result) {
  const double rho = result.rho;
  if (!(rho > 0.0)) throw InvalidInput("wild_optimism: rho must be positive");
  const auto n = static_cast<double>(result.fhat.n());
  double to_fhat = 0.0;
  double to_wild = 0.0;
  for (Eigen::Index i = 0; i < result.fhat.n(); ++i) {
    const auto fd = result.fdiamond.values.row(i).transpose();
    to_fhat += divergence(loss, result.fhat.values.row(i).transpose(), fd);
    to_wild += divergence(loss, result.wild_responses.row(i).transpose(), fd);
  }
  const double noise_energy = result.symmetrized_residues().squaredNorm();
  return to_fhat / (n * rho) - to_wild / (n * rho) + loss.beta() * rho * noise_energy / n;
}

namespace {

class RadiusMap {
 public:
  RadiusMap(const Trainer& trainer, const FixedDesignDataset& data, PredictionMatrix fhat, SignMatrix signs)
      : trainer_(trainer), data_(data), fhat_(std::move(fhat)), signs_(std::move(signs)) {}

  double operator()(double rho) {
    WildRefitResult r = wild_refit_from_fit(trainer_, data_, fhat_, signs_, rho);
    const double radius = wild_radius(trainer_.loss(), r);
    trace.push_back({rho, radius});
    last = std::move(r);
    return radius;
  }

  std::vector<TracePoint> trace;
  WildRefitResult last;

 private:
  const Trainer& trainer_;
  const FixedDesignDataset& data_;
  PredictionMatrix fhat_;
  SignMatrix signs_;
};

}  // namespace

CalibrationResult calibrate_rho(const Trainer& trainer, const FixedDesignDataset& data, double target_radius,
                                const CalibrationOptions& opts) {
  if (!(target_radius > 0.0) || !std::isfinite(target_radius)) {
    throw InvalidInput("calibrate_rho: target radius must be positive");
  }
  if (!(opts.rho_lo > 0.0 && opts.rho_lo < opts.rho_hi)) throw InvalidInput("calibrate_rho: need 0 < rho_lo < rho_hi");
  if (!(opts.tol_rel > 0.0)) throw InvalidInput("calibrate_rho: tol_rel must be positive");

  PredictionMatrix fhat;
  try {
    fhat = trainer.fit(data);
  } catch (const std::exception& e) {
    throw StageError("initial fit", e.what());
  }
  RadiusMap radius(trainer, data, std::move(fhat), sample_sign_matrix(data.n(), data.d(), opts.seed));

  const double tol = opts.tol_rel * target_radius;
  const auto done = [&](double r) { return std::abs(r - target_radius) <= tol; };
  const auto finish = [&](double rho, double r, bool grid) {
    CalibrationResult out;
    out.rho = rho;
    out.achieved_radius = r;
    out.result = radius.last;
    out.trace = radius.trace;
    out.used_grid_fallback = grid;
    return out;
  };

  // Bracket [below, above] with radius(below) < target < radius(above).
  double rho = std::clamp(opts.rho_start, opts.rho_lo, opts.rho_hi);
  double r = radius(rho);
  if (done(r)) return finish(rho, r, false);
  double below = 0.0;
  double above = 0.0;
  bool bracketed = false;
  bool monotone = true;
  const double factor = r < target_radius ? 2.0 : 0.5;
  double prev_r = r;
  while (true) {
    const double next = rho * factor;
    if (next > opts.rho_hi * (1.0 + 1e-12) || next < opts.rho_lo * (1.0 - 1e-12)) break;
    const double next_r = radius(next);
    if (done(next_r)) return finish(next, next_r, false);
    if ((factor > 1.0 && next_r < prev_r) || (factor < 1.0 && next_r > prev_r)) {
      monotone = false;
      break;
    }
    if ((factor > 1.0 && next_r > target_radius) || (factor < 1.0 && next_r < target_radius)) {
      below = factor > 1.0 ? rho : next;
      above = factor > 1.0 ? next : rho;
      bracketed = true;
      break;
    }
    rho = next;
    prev_r = next_r;
  }

  bool grid = false;
  if (!bracketed && !monotone) {
    grid = true;
    const int points_per_decade = 8;
    const double ratio = std::pow(10.0, 1.0 / points_per_decade);
    double prev_rho = opts.rho_lo;
    double prev = radius(prev_rho);
    if (done(prev)) return finish(prev_rho, prev, true);
    for (double cand = opts.rho_lo * ratio; cand <= opts.rho_hi * (1.0 + 1e-12); cand *= ratio) {
      const double cr = radius(cand);
      if (done(cr)) return finish(cand, cr, true);
      if ((prev - target_radius) * (cr - target_radius) < 0.0) {
        below = prev < target_radius ? prev_rho : cand;
        above = prev < target_radius ? cand : prev_rho;
        bracketed = true;
        break;
      }
      prev_rho = cand;
      prev = cr;
    }
  }
  if (!bracketed) {
    throw CalibrationError("calibrate_rho: no bracket for target radius " + short_number(target_radius) +
                               " with rho in [" + short_number(opts.rho_lo) + ", " + short_number(opts.rho_hi) +
                               "]; largest radius seen " + short_number(largest_radius(radius.trace)),
                           radius.trace);
  }

  for (int it = 0; it < opts.max_bisect; ++it) {
    const double mid = 0.5 * (below + above);
    const double mr = radius(mid);
    if (done(mr)) return finish(mid, mr, grid);
    if (mr < target_radius) below = mid; else above = mid;
  }
  throw CalibrationError("calibrate_rho: bisection did not reach tolerance (radius map may be discontinuous)",
                         radius.trace);
}

}  // namespace wildrefit
