#pragma once

#include <map>
#include <string>

#include "wildrefit/complexity.hpp"
#include "wildrefit/wildfit.hpp"

namespace wildrefit {

enum class CertificateMode { fixed_design, random_design };

std::string to_string(CertificateMode mode);

struct RiskCertificate {
  double training_error = 0.0;
  double wild_optimism_abs = 0.0;
  double pilot = 0.0;
  double deviation = 0.0;
  double stability_addend = 0.0;
  double total = 0.0;
  double delta = 0.0;
  double failure_budget = 0.0;
  CertificateMode mode = CertificateMode::fixed_design;
  std::map<std::string, std::string> provenance;

  // training + 2 (|opt| + pilot + deviation) + stability, in that order of evaluation.
  double recompute_total() const;
};

struct StabilityConstants {
  double M = 0.0;
  double L = 0.0;
  double alpha = 0.0;
  double eps_sta = 0.0;
};

// Where a certificate input came from.
enum class InputSource { oracle, supplied, plug_in_default };

struct SourcedValue {
  double value = 0.0;
  InputSource source = InputSource::plug_in_default;
};

std::string to_string(InputSource source);

// (1/n) sum_i <grad phi(f*_i) - grad phi(fhat_i), w_i>
double true_optimism_oracle(const BregmanLoss& loss, const PredictionMatrix& fhat, const PredictionMatrix& fstar_preds,
                            const Matrix& noise);

// Same with f_dagger in place of f*.
double dagger_optimism_oracle(const BregmanLoss& loss, const PredictionMatrix& fhat,
                              const PredictionMatrix& fdagger_preds, const Matrix& noise);

// Relative tolerance used to check that rho was calibrated to 3 sqrt(beta/alpha) r_certified.
inline constexpr double kCertificateCalibrationTol = 2e-3;

/// training + 2 (|wild optimism| + A_n + B_n), failure budget 8 delta.
///
/// Requires sqrt(L_n(fhat, fdiamond)) = 3 sqrt(beta/alpha) radius.r_certified within
/// kCertificateCalibrationTol (relative).
RiskCertificate fixed_design_certificate(const BregmanLoss& loss, const WildRefitResult& refit,
                                         const RadiusReport& radius, double delta, SourcedValue pilot,
                                         SourcedValue misspec, SourcedValue w_inf);

// Plain-number overload; every input is treated as supplied by the caller.
RiskCertificate fixed_design_certificate(const BregmanLoss& loss, const WildRefitResult& refit,
                                         const RadiusReport& radius, double delta, double pilot, double misspec,
                                         double w_inf);

// sup D_phi over C x C and sup ||grad phi|| over C. Built-ins use closed forms; pass
// force_grid to use the certified grid search (d <= 3) instead.
StabilityConstants stability_constants(const BregmanLoss& loss, const CompactSet& set, Eigen::Index n,
                                       bool force_grid = false);

// sqrt((M^2 + 36 M L^2 / alpha) / (2 n delta)) + M sqrt(log(2/delta) / (2n))
double random_design_addend(const StabilityConstants& consts, Eigen::Index n, double delta);

RiskCertificate random_design_certificate(const RiskCertificate& fixed, const StabilityConstants& consts,
                                          Eigen::Index n, double delta);

}  // namespace wildrefit
