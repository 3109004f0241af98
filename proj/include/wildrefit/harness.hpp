#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wildrefit/certify.hpp"
#include "wildrefit/rng.hpp"
#include "wildrefit/trainer.hpp"

namespace wildrefit {

enum class DesignKind { fixed, random };
enum class FstarFamily { constant, linear, nonlinear };
enum class NoiseFamily { uniform, scaled_rademacher, heteroskedastic };

std::string to_string(DesignKind kind);
std::string to_string(FstarFamily family);
std::string to_string(NoiseFamily family);
DesignKind design_kind_from_string(const std::string& name);
FstarFamily fstar_family_from_string(const std::string& name);
NoiseFamily noise_family_from_string(const std::string& name);

struct FstarSpec {
  FstarFamily family = FstarFamily::linear;
  std::optional<double> offset;  // default depends on the potential
  std::optional<double> scale;
};

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::uniform;
  double amplitude = 0.5;
  std::vector<double> amplitudes;  // heteroskedastic; empty means amplitude * (j + 1) / d
};

struct SyntheticSpec {
  Eigen::Index n = 200;
  Eigen::Index d = 2;
  Eigen::Index p = 2;
  DesignKind design = DesignKind::fixed;
  PotentialSpec potential;
  FstarSpec fstar;
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

struct OracleContext {
  PredictionMatrix fstar_preds;
  Matrix noise;
  PredictionMatrix fdagger_preds;  // empty until a trainer is attached
  double w_inf = 0.0;
};

/// Ground-truth regression function and noise law on the inputs [-1, 1]^p.
///
/// f* takes values offset + scale * g(x) with |g| <= 1 coordinate-wise (centered across
/// coordinates on the simplex so rows sum to one). Noise coordinates are symmetric; on the
/// simplex they are half-differences of neighbouring coordinates so that rows sum to zero.
class SyntheticModel {
 public:
  SyntheticModel(const SyntheticSpec& spec, std::uint64_t model_seed);

  const SyntheticSpec& spec() const noexcept { return spec_; }
  const Potential& potential() const noexcept { return potential_; }

  Matrix sample_inputs(Eigen::Index n, Engine& engine) const;
  Matrix fstar(const Matrix& inputs) const;
  Matrix sample_noise(Eigen::Index n, Engine& engine) const;

  // Coordinate-wise bound on |w_ij|.
  const Vector& noise_bound() const noexcept { return noise_bound_; }

 private:
  void check_support() const;

  SyntheticSpec spec_;
  Potential potential_;
  double offset_ = 0.0;
  double scale_ = 1.0;
  Vector level_;      // constant family
  Matrix theta_;      // p x d
  Vector intercept_;  // d
  Vector amplitudes_;
  Vector noise_bound_;
};

// Dataset and oracle from spec.seed. If a trainer is given, f_dagger is fitted on the
// noiseless responses.
std::pair<FixedDesignDataset, OracleContext> generate_synthetic(const SyntheticSpec& spec,
                                                                 const Trainer* trainer = nullptr);

// (1/n) sum l(y_i, fhat_i) - (1/n) sum l(y_i, f*_i)
double realized_excess_risk(const BregmanLoss& loss, const FixedDesignDataset& data, const PredictionMatrix& fhat,
                            const OracleContext& oracle);

enum class TheoremCheck { lemma_5_1, thm_5_1_optimism, thm_5_1_excess, thm_6_1_rhat, thm_5_2_excess };
enum class RadiusPolicy { oracle, fixed_point };

std::string to_string(TheoremCheck theorem);
std::string to_string(RadiusPolicy policy);
TheoremCheck theorem_from_string(const std::string& name);
RadiusPolicy radius_policy_from_string(const std::string& name);

struct ExperimentConfig {
  TheoremCheck theorem = TheoremCheck::thm_5_1_excess;
  int reps = 200;
  double delta = 0.05;
  SyntheticSpec spec;
  TrainerSpec trainer;
  RadiusPolicy radius_policy = RadiusPolicy::oracle;
  double radius_delta = 1.2340980408667956e-4;  // e^-9, for the fixed-point radius
  double rho = 1.0;                              // lemma_5_1 only
  Eigen::Index holdout = 100000;                 // random-design excess risk sample
  double set_bound = 10.0;                       // box half-width for unbounded domains
  double lemma_tol = 1e-8;
};

struct ReplicationRecord {
  int rep = 0;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::string error;  // non-empty: the pipeline failed and lhs/rhs are meaningless
};

struct CoverageReport {
  TheoremCheck theorem = TheoremCheck::thm_5_1_excess;
  int replications = 0;
  int successes = 0;
  int errors = 0;
  double empirical_coverage = 0.0;
  double target_coverage = 0.0;
  double pass_threshold = 0.0;
  bool passed = false;
  std::vector<ReplicationRecord> per_replication;
};

// 1 - failure budget of the claim (1 for the deterministic lemma), floored at 0.
double target_coverage(TheoremCheck theorem, double delta);

/// Runs `reps` independent replications keyed by derive_seed(spec.seed, replication, rep).
///
/// Passes iff no replication errored and coverage >= target - 2 sqrt(target (1 - target) / reps);
/// for lemma_5_1 every replication must hold.
CoverageReport run_coverage(const ExperimentConfig& config);

}  // namespace wildrefit
