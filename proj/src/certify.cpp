#include "wildrefit/certify.hpp"

#include <cmath>
#include <sstream>
#include <variant>

namespace wildrefit {
namespace {

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double optimism(const BregmanLoss& loss, const PredictionMatrix& fhat, const PredictionMatrix& ref,
                const Matrix& noise) {
  require_same_shape(fhat.values, ref.values, "optimism: predictions");
  require_same_shape(fhat.values, noise, "optimism: noise");
  const Potential& phi = loss.potential();
  double total = 0.0;
  for (Eigen::Index i = 0; i < noise.rows(); ++i) {
    const Vector g = phi.gradient(ref.values.row(i).transpose()) - phi.gradient(fhat.values.row(i).transpose());
    total += g.dot(noise.row(i).transpose());
  }
  return total / static_cast<double>(noise.rows());
}

void require_nonnegative(const SourcedValue& v, const char* what) {
  if (!(v.value >= 0.0) || !std::isfinite(v.value)) throw InvalidInput(std::string(what) + " must be finite and >= 0");
}

constexpr double kGridResolution = 1e-3;
constexpr double kGridPointCap = 1e6;

// Certified upper bounds from a grid over a box: every point of the box is within half a
// grid diagonal h of a node, D_phi(x, .) is (beta diam)-Lipschitz and grad phi is
// beta-Lipschitz, so inflating the grid maxima by those moduli times h is safe. The sup of
// D_phi(., y) is taken over corners since D_phi(., y) is convex.
StabilityConstants grid_constants(const BregmanLoss& loss, const Box& box) {
  const Eigen::Index d = box.lo.size();
  if (d > 3) throw UnsupportedConfiguration("stability constants: grid search supports d <= 3 only");
  if (!box.lo.allFinite() || !box.hi.allFinite())
    throw UnsupportedConfiguration("stability constants: grid search needs a bounded box");
  const Potential& phi = loss.potential();
  const double per_axis_cap = std::floor(std::pow(kGridPointCap, 1.0 / static_cast<double>(d)));
  std::vector<Eigen::Index> counts(d);
  Vector step(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double width = box.hi[j] - box.lo[j];
    const double wanted = std::ceil(width / kGridResolution) + 1.0;
    counts[j] = static_cast<Eigen::Index>(std::max(2.0, std::min(wanted, per_axis_cap)));
    step[j] = width / static_cast<double>(counts[j] - 1);
  }
  const double h = 0.5 * step.norm();
  const double diam = (box.hi - box.lo).norm();

  std::vector<Vector> corners;
  for (Eigen::Index mask = 0; mask < (Eigen::Index{1} << d); ++mask) {
    Vector c(d);
    for (Eigen::Index j = 0; j < d; ++j) c[j] = (mask >> j) & 1 ? box.hi[j] : box.lo[j];
    corners.push_back(c);
  }

  double m_grid = 0.0;
  double l_grid = 0.0;
  std::vector<Eigen::Index> idx(d, 0);
  Vector y(d);
  for (;;) {
    for (Eigen::Index j = 0; j < d; ++j) y[j] = box.lo[j] + step[j] * static_cast<double>(idx[j]);
    for (const Vector& x : corners) m_grid = std::max(m_grid, divergence(loss, x, y));
    l_grid = std::max(l_grid, phi.gradient(y).norm());
    Eigen::Index j = 0;
    while (j < d && ++idx[j] == counts[j]) idx[j++] = 0;
    if (j == d) break;
  }
  StabilityConstants out;
  out.M = m_grid + loss.beta() * diam * h;
  out.L = l_grid + loss.beta() * h;
  return out;
}

}  // namespace

std::string to_string(CertificateMode mode) {
  return mode == CertificateMode::fixed_design ? "fixed_design" : "random_design";
}

std::string to_string(InputSource source) {
  switch (source) {
    case InputSource::oracle: return "oracle";
    case InputSource::supplied: return "supplied";
    case InputSource::plug_in_default: return "plug_in_default";
  }
  return "plug_in_default";
}

double RiskCertificate::recompute_total() const {
  return training_error + 2.0 * (wild_optimism_abs + pilot + deviation) + stability_addend;
}

double true_optimism_oracle(const BregmanLoss& loss, const PredictionMatrix& fhat, const PredictionMatrix& fstar_preds,
                            const Matrix& noise) {
  return optimism(loss, fhat, fstar_preds, noise);
}

double dagger_optimism_oracle(const BregmanLoss& loss, const PredictionMatrix& fhat,
                              const PredictionMatrix& fdagger_preds, const Matrix& noise) {
  return optimism(loss, fhat, fdagger_preds, noise);
}

RiskCertificate fixed_design_certificate(const BregmanLoss& loss, const WildRefitResult& refit,
                                         const RadiusReport& radius, double delta, SourcedValue pilot,
                                         SourcedValue misspec, SourcedValue w_inf) {
  if (!(delta > 0.0 && delta < 0.125)) throw InvalidInput("fixed-design certificate: delta must lie in (0, 1/8)");
  if (!(radius.r_certified >= 0.0)) throw InvalidInput("fixed-design certificate: r_certified must be >= 0");
  require_nonnegative(pilot, "pilot");
  require_nonnegative(misspec, "misspec");
  require_nonnegative(w_inf, "w_inf");

  const double achieved = wild_radius(loss, refit);
  const double wanted = 3.0 * loss.c0() * radius.r_certified;
  if (std::abs(achieved - wanted) > kCertificateCalibrationTol * wanted) {
    throw InvalidInput("fixed-design certificate: wild radius " + format_double(achieved) +
                       " does not match 3 sqrt(beta/alpha) r_certified = " + format_double(wanted) +
                       " (r_certified = " + format_double(radius.r_certified) + ")");
  }

  RiskCertificate cert;
  cert.mode = CertificateMode::fixed_design;
  cert.delta = delta;
  cert.failure_budget = 8.0 * delta;
  cert.training_error = empirical_discrepancy(loss, refit.responses, refit.fhat.values);
  cert.wild_optimism_abs = std::abs(wild_optimism(loss, refit));
  cert.pilot = pilot.value;
  cert.deviation = deviation_term(loss, misspec.value, radius.r_certified, w_inf.value, refit.fhat.n(),
                                  refit.fhat.d(), delta);
  cert.stability_addend = 0.0;
  cert.total = cert.recompute_total();

  const bool theorem_grade = pilot.source == InputSource::oracle && misspec.source == InputSource::oracle &&
                             w_inf.source == InputSource::oracle;
  cert.provenance["grade"] = theorem_grade ? "theorem-grade" : "plug-in";
  cert.provenance["pilot_source"] = to_string(pilot.source);
  cert.provenance["misspec_source"] = to_string(misspec.source);
  cert.provenance["w_inf_source"] = to_string(w_inf.source);
  cert.provenance["radius_method"] = to_string(radius.method);
  cert.provenance["deviation_t"] = "sqrt(log(1/delta))";
  cert.provenance["clipped_wild_rows"] = std::to_string(refit.clipped_rows);
  if (pilot.source == InputSource::plug_in_default)
    cert.provenance["pilot_caveat"] = "pilot error replaced by 0; the bound is not guaranteed";
  if (misspec.source == InputSource::plug_in_default)
    cert.provenance["misspec_caveat"] = "misspecification term replaced by 0; valid only if the model is well specified";
  if (w_inf.source == InputSource::plug_in_default)
    cert.provenance["w_inf_caveat"] = "noise sup-norm estimated by max |residue|";
  return cert;
}

RiskCertificate fixed_design_certificate(const BregmanLoss& loss, const WildRefitResult& refit,
                                         const RadiusReport& radius, double delta, double pilot, double misspec,
                                         double w_inf) {
  return fixed_design_certificate(loss, refit, radius, delta, {pilot, InputSource::supplied},
                                  {misspec, InputSource::supplied}, {w_inf, InputSource::supplied});
}

StabilityConstants stability_constants(const BregmanLoss& loss, const CompactSet& set, Eigen::Index n,
                                       bool force_grid) {
  if (n < 2) throw InvalidInput("stability constants: n must be at least 2");
  require_subset_of_domain(set, loss.potential());
  StabilityConstants out;
  if (force_grid) {
    const auto* box = std::get_if<Box>(&set.region());
    if (box == nullptr) throw UnsupportedConfiguration("stability constants: grid search supports boxes only");
    out = grid_constants(loss, *box);
  } else {
    out.M = max_divergence_on_set(loss, set);
    out.L = max_gradient_norm_on_set(loss, set);
  }
  out.alpha = loss.alpha();
  out.eps_sta = 2.0 * out.L * out.L / (out.alpha * static_cast<double>(n - 1));
  return out;
}

double random_design_addend(const StabilityConstants& consts, Eigen::Index n, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("random-design addend: delta must lie in (0, 1)");
  if (n < 1) throw InvalidInput("random-design addend: n must be positive");
  if (!(consts.M >= 0.0) || !(consts.L >= 0.0) || !(consts.alpha > 0.0))
    throw InvalidInput("random-design addend: need M, L >= 0 and alpha > 0");
  const double nn = static_cast<double>(n);
  const double m = consts.M;
  const double first = std::sqrt((m * m + 36.0 * m * consts.L * consts.L / consts.alpha) / (2.0 * nn * delta));
  const double second = m * std::sqrt(std::log(2.0 / delta) / (2.0 * nn));
  return first + second;
}

RiskCertificate random_design_certificate(const RiskCertificate& fixed, const StabilityConstants& consts,
                                          Eigen::Index n, double delta) {
  if (fixed.mode != CertificateMode::fixed_design)
    throw InvalidInput("random-design certificate: input must be a fixed-design certificate");
  if (!(delta > 0.0 && delta < 1.0 / 11.0)) throw InvalidInput("random-design certificate: delta must lie in (0, 1/11)");
  RiskCertificate cert = fixed;
  cert.mode = CertificateMode::random_design;
  cert.delta = delta;
  cert.failure_budget = 11.0 * delta;
  cert.stability_addend = random_design_addend(consts, n, delta);
  cert.total = fixed.total + cert.stability_addend;
  cert.provenance["iid_assumption"] = "declared, not verified";
  cert.provenance["stability_M"] = format_double(consts.M);
  cert.provenance["stability_L"] = format_double(consts.L);
  if (fixed.delta != delta)
    cert.provenance["delta_note"] = "fixed-design part was assembled at delta = " + format_double(fixed.delta);
  return cert;
}

}  // namespace wildrefit
