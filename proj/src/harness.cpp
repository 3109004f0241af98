#include "wildrefit/harness.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <variant>

namespace wildrefit {
namespace {

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& name, const std::pair<const char*, Enum> (&table)[N], const char* what) {
  for (const auto& [key, value] : table)
    if (name == key) return value;
  throw InvalidInput(std::string("unknown ") + what + ": " + name);
}

constexpr std::pair<const char*, DesignKind> kDesigns[] = {{"fixed", DesignKind::fixed},
                                                            {"random", DesignKind::random}};
constexpr std::pair<const char*, FstarFamily> kFamilies[] = {
    {"constant", FstarFamily::constant}, {"linear", FstarFamily::linear}, {"nonlinear", FstarFamily::nonlinear}};
constexpr std::pair<const char*, NoiseFamily> kNoises[] = {{"uniform", NoiseFamily::uniform},
                                                            {"scaled_rademacher", NoiseFamily::scaled_rademacher},
                                                            {"heteroskedastic", NoiseFamily::heteroskedastic}};
constexpr std::pair<const char*, TheoremCheck> kTheorems[] = {{"lemma_5_1", TheoremCheck::lemma_5_1},
                                                               {"thm_5_1_optimism", TheoremCheck::thm_5_1_optimism},
                                                               {"thm_5_1_excess", TheoremCheck::thm_5_1_excess},
                                                               {"thm_6_1_rhat", TheoremCheck::thm_6_1_rhat},
                                                               {"thm_5_2_excess", TheoremCheck::thm_5_2_excess}};
constexpr std::pair<const char*, RadiusPolicy> kPolicies[] = {{"oracle", RadiusPolicy::oracle},
                                                               {"fixed_point", RadiusPolicy::fixed_point}};

template <typename Enum, std::size_t N>
std::string enum_name(Enum value, const std::pair<const char*, Enum> (&table)[N]) {
  for (const auto& [key, v] : table)
    if (v == value) return key;
  return "unknown";
}

bool on_simplex(const Potential& phi) { return std::holds_alternative<ClippedSimplex>(phi.domain()); }

}  // namespace

std::string to_string(DesignKind kind) { return enum_name(kind, kDesigns); }
std::string to_string(FstarFamily family) { return enum_name(family, kFamilies); }
std::string to_string(NoiseFamily family) { return enum_name(family, kNoises); }
std::string to_string(TheoremCheck theorem) { return enum_name(theorem, kTheorems); }
std::string to_string(RadiusPolicy policy) { return enum_name(policy, kPolicies); }
DesignKind design_kind_from_string(const std::string& name) { return parse_enum(name, kDesigns, "design"); }
FstarFamily fstar_family_from_string(const std::string& name) { return parse_enum(name, kFamilies, "f* family"); }
NoiseFamily noise_family_from_string(const std::string& name) { return parse_enum(name, kNoises, "noise family"); }
TheoremCheck theorem_from_string(const std::string& name) { return parse_enum(name, kTheorems, "theorem"); }
RadiusPolicy radius_policy_from_string(const std::string& name) {
  if (name == "fixed-point") return RadiusPolicy::fixed_point;
  return parse_enum(name, kPolicies, "radius policy");
}

SyntheticModel::SyntheticModel(const SyntheticSpec& spec, std::uint64_t model_seed)
    : spec_(spec), potential_(builtin_potential(spec.potential, static_cast<int>(spec.d))) {
  if (spec.d < 1 || spec.p < 0) throw InvalidInput("synthetic spec: need d >= 1 and p >= 0");
  const auto d = spec.d;
  const bool simplex = on_simplex(potential_);
  switch (potential_.kind()) {
    case PotentialKind::squared_l2:
      offset_ = 0.0;
      scale_ = 1.0;
      break;
    case PotentialKind::sqrt_bernoulli:
      offset_ = 0.5;
      scale_ = 0.15;
      break;
    case PotentialKind::clipped_simplex_kl:
      offset_ = 1.0 / static_cast<double>(d);
      scale_ = 0.25 * (offset_ - potential_.parameter());
      break;
  }
  if (spec.fstar.offset) {
    if (simplex && std::abs(*spec.fstar.offset - offset_) > 1e-15)
      throw InvalidInput("synthetic spec: on the simplex f* is centered at 1/d; offset cannot be changed");
    offset_ = *spec.fstar.offset;
  }
  if (spec.fstar.scale) scale_ = *spec.fstar.scale;
  if (!std::isfinite(offset_) || !(scale_ >= 0.0) || !std::isfinite(scale_))
    throw InvalidInput("synthetic spec: f* offset must be finite and scale >= 0");

  Engine engine = make_engine(model_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  level_.resize(d);
  for (auto& v : level_) v = unit(engine);
  theta_.resize(spec.p, d);
  for (Eigen::Index k = 0; k < spec.p; ++k)
    for (Eigen::Index j = 0; j < d; ++j) theta_(k, j) = unit(engine);
  intercept_.resize(d);
  for (auto& v : intercept_) v = unit(engine);

  amplitudes_ = Vector::Constant(d, spec.noise.amplitude);
  if (spec.noise.family == NoiseFamily::heteroskedastic) {
    if (spec.noise.amplitudes.empty()) {
      for (Eigen::Index j = 0; j < d; ++j)
        amplitudes_[j] = spec.noise.amplitude * static_cast<double>(j + 1) / static_cast<double>(d);
    } else {
      if (static_cast<Eigen::Index>(spec.noise.amplitudes.size()) != d)
        throw InvalidInput("synthetic spec: heteroskedastic amplitudes need one entry per coordinate");
      for (Eigen::Index j = 0; j < d; ++j) amplitudes_[j] = spec.noise.amplitudes[static_cast<std::size_t>(j)];
    }
  }
  if (!amplitudes_.allFinite() || (amplitudes_.array() < 0.0).any())
    throw InvalidInput("synthetic spec: noise amplitudes must be finite and >= 0");
  noise_bound_ = amplitudes_;
  if (simplex) {
    for (Eigen::Index j = 0; j < d; ++j) noise_bound_[j] = 0.5 * (amplitudes_[j] + amplitudes_[(j + 1) % d]);
  }
  check_support();
}

void SyntheticModel::check_support() const {
  const Eigen::Index d = spec_.d;
  Vector lo(d);
  Vector hi(d);
  if (const auto* s = std::get_if<ClippedSimplex>(&potential_.domain())) {
    lo.setConstant(s->eta);
    hi.setConstant(1.0);
  } else {
    const auto& b = std::get<Box>(potential_.domain());
    lo = b.lo;
    hi = b.hi;
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    const double reach = scale_ + noise_bound_[j];
    if (offset_ - reach < lo[j] || offset_ + reach > hi[j]) {
      throw InvalidInput("synthetic spec: domain overflow, f* +- noise can leave the domain of " +
                         to_string(potential_.kind()) + " in coordinate " + std::to_string(j + 1));
    }
  }
}

Matrix SyntheticModel::sample_inputs(Eigen::Index n, Engine& engine) const {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix x(n, spec_.p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < spec_.p; ++k) x(i, k) = unit(engine);
  return x;
}

Matrix SyntheticModel::fstar(const Matrix& inputs) const {
  if (inputs.cols() != spec_.p) throw InvalidInput("f*: input width differs from p");
  const Eigen::Index n = inputs.rows();
  const Eigen::Index d = spec_.d;
  Matrix g(n, d);
  switch (spec_.fstar.family) {
    case FstarFamily::constant: g = level_.transpose().replicate(n, 1); break;
    case FstarFamily::linear:
      g = ((inputs * theta_).rowwise() + intercept_.transpose()) / static_cast<double>(spec_.p + 1);
      break;
    case FstarFamily::nonlinear:
      g = ((inputs * theta_).rowwise() + intercept_.transpose()).array().unaryExpr([](double u) {
        return std::sin(std::numbers::pi * u);
      });
      break;
  }
  if (on_simplex(potential_)) {
    const Vector mean = g.rowwise().mean();
    g = 0.5 * (g.colwise() - mean);
  }
  return (scale_ * g).array() + offset_;
}

Matrix SyntheticModel::sample_noise(Eigen::Index n, Engine& engine) const {
  const Eigen::Index d = spec_.d;
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix v(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double xi = spec_.noise.family == NoiseFamily::scaled_rademacher ? ((engine() >> 63) ? 1.0 : -1.0)
                                                                             : unit(engine);
      v(i, j) = amplitudes_[j] * xi;
    }
  }
  if (!on_simplex(potential_)) return v;
  Matrix w(n, d);
  for (Eigen::Index j = 0; j < d; ++j) w.col(j) = 0.5 * (v.col(j) - v.col((j + 1) % d));
  return w;
}

std::pair<FixedDesignDataset, OracleContext> generate_synthetic(const SyntheticSpec& spec, const Trainer* trainer) {
  if (spec.n < 1) throw InvalidInput("synthetic spec: n must be positive");
  const SyntheticModel model(spec, derive_seed(spec.seed, Stream::model));
  Engine inputs_engine = make_engine(derive_seed(spec.seed, Stream::inputs));
  Engine noise_engine = make_engine(derive_seed(spec.seed, Stream::noise));
  Matrix inputs = model.sample_inputs(spec.n, inputs_engine);
  Matrix fs = model.fstar(inputs);
  Matrix noise = model.sample_noise(spec.n, noise_engine);
  OracleContext oracle;
  oracle.w_inf = noise.size() ? noise.cwiseAbs().maxCoeff() : 0.0;
  FixedDesignDataset data(inputs, fs + noise);
  if (trainer != nullptr) oracle.fdagger_preds = trainer->fit(data.with_responses(fs));
  oracle.fstar_preds = PredictionMatrix{std::move(fs)};
  oracle.noise = std::move(noise);
  return {std::move(data), std::move(oracle)};
}

double realized_excess_risk(const BregmanLoss& loss, const FixedDesignDataset& data, const PredictionMatrix& fhat,
                            const OracleContext& oracle) {
  require_same_shape(data.responses(), fhat.values, "excess risk: responses and fhat");
  require_same_shape(data.responses(), oracle.fstar_preds.values, "excess risk: responses and f*");
  return empirical_discrepancy(loss, data.responses(), fhat.values) -
         empirical_discrepancy(loss, data.responses(), oracle.fstar_preds.values);
}

double target_coverage(TheoremCheck theorem, double delta) {
  double budget = 0.0;
  switch (theorem) {
    case TheoremCheck::lemma_5_1: return 1.0;
    case TheoremCheck::thm_5_1_optimism:
    case TheoremCheck::thm_5_1_excess: budget = 8.0 * delta; break;
    case TheoremCheck::thm_6_1_rhat: budget = 4.0 * delta; break;
    case TheoremCheck::thm_5_2_excess: budget = 11.0 * delta; break;
  }
  return std::max(0.0, 1.0 - budget);
}

namespace {

struct Claim {
  double lhs;
  double rhs;
};

class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg)
      : cfg_(cfg),
        loss_(builtin_potential(cfg.spec.potential, static_cast<int>(cfg.spec.d))),
        set_(default_compact_set(loss_.potential(), cfg.set_bound)),
        trainer_(make_trainer(cfg.trainer, loss_, set_)),
        model_(cfg.spec, derive_seed(cfg.spec.seed, Stream::model)) {
    if (cfg.spec.design == DesignKind::fixed) {
      Engine engine = make_engine(derive_seed(cfg.spec.seed, Stream::inputs));
      fixed_inputs_ = model_.sample_inputs(cfg.spec.n, engine);
      fixed_fstar_ = model_.fstar(fixed_inputs_);
    }
    if (cfg.theorem == TheoremCheck::thm_5_2_excess) {
      linear_ = dynamic_cast<const LinearTrainer*>(trainer_.get());
      if (linear_ == nullptr)
        throw UnsupportedConfiguration("thm_5_2_excess needs the linear trainer to predict off the design");
      if (cfg.spec.design != DesignKind::random)
        throw UnsupportedConfiguration("thm_5_2_excess needs design = random");
      if (cfg.holdout < 1) throw InvalidInput("holdout sample size must be positive");
    }
  }

  Claim run(std::uint64_t rep_seed) {
    const Eigen::Index n = cfg_.spec.n;
    const bool fixed = cfg_.spec.design == DesignKind::fixed;
    Matrix inputs;
    Matrix fs;
    if (fixed) {
      inputs = fixed_inputs_;
      fs = fixed_fstar_;
    } else {
      Engine engine = make_engine(derive_seed(rep_seed, Stream::inputs));
      inputs = model_.sample_inputs(n, engine);
      fs = model_.fstar(inputs);
    }
    Engine noise_engine = make_engine(derive_seed(rep_seed, Stream::noise));
    const Matrix noise = model_.sample_noise(n, noise_engine);
    const FixedDesignDataset data(inputs, fs + noise);
    const std::uint64_t sign_seed = derive_seed(rep_seed, Stream::signs);
    const double w_inf = noise.cwiseAbs().maxCoeff();

    if (cfg_.theorem == TheoremCheck::lemma_5_1) {
      const WildRefitResult result = wild_refit(*trainer_, data, cfg_.rho, sign_seed);
      const double radius = wild_radius(loss_, result);
      return {wn(loss_, set_, result.fhat, result.symmetrized_residues(), radius), wild_optimism(loss_, result)};
    }

    const PredictionMatrix fdagger = fixed ? cached_dagger(data) : trainer_->fit(data.with_responses(fs));
    std::optional<LinearFit> fit;
    PredictionMatrix fhat;
    if (linear_ != nullptr) {
      fit = linear_->fit_model(data);
      fhat = fit->predictions;
    } else {
      fhat = trainer_->fit(data);
    }
    const PredictionMatrix fstar_preds{fs};
    const double r_hat = std::sqrt(empirical_discrepancy(loss_, fdagger, fhat));

    if (cfg_.theorem == TheoremCheck::thm_6_1_rhat) {
      const SignMatrix signs = sample_sign_matrix(n, cfg_.spec.d, sign_seed);
      const Matrix z = signs.values.cwiseProduct(data.responses() - fhat.values);
      const double pilot = pilot_error_oracle(loss_, set_, fhat, fstar_preds, signs, r_hat);
      const WnEvaluator eval = make_wn_evaluator(loss_, set_, fhat, z);
      return {r_hat * r_hat, rhat_first_claim_rhs(loss_, eval, r_hat, cfg_.delta, n, w_inf, cfg_.spec.d, pilot)};
    }

    double r = r_hat;
    RadiusMethod method = RadiusMethod::oracle;
    if (cfg_.radius_policy == RadiusPolicy::fixed_point) {
      const SignMatrix signs = sample_sign_matrix(n, cfg_.spec.d, sign_seed);
      const Matrix z = signs.values.cwiseProduct(data.responses() - fhat.values);
      RadiusSearchOptions ropts;
      ropts.r_max = radius_scale(loss_, set_);
      r = fixed_point_radius(make_wn_evaluator(loss_, set_, fhat, z), cfg_.radius_delta, n, ropts);
      method = RadiusMethod::fixed_point;
    }
    if (!(r > 0.0)) throw InvalidInput("certified radius is zero; nothing to calibrate");

    CalibrationOptions copts;
    copts.seed = sign_seed;
    const CalibrationResult cal = calibrate_rho(*trainer_, data, 3.0 * loss_.c0() * r, copts);
    const WildRefitResult& refit = cal.result;
    const double pilot = pilot_error_oracle(loss_, set_, refit.fhat, fstar_preds, refit.signs, r);
    const double misspec = std::sqrt(empirical_discrepancy(loss_, fstar_preds, fdagger));
    const RadiusReport report{r_hat, cal.achieved_radius, r, method};
    const RiskCertificate cert =
        fixed_design_certificate(loss_, refit, report, cfg_.delta, {pilot, InputSource::oracle},
                                 {misspec, InputSource::oracle}, {w_inf, InputSource::oracle});

    switch (cfg_.theorem) {
      case TheoremCheck::thm_5_1_optimism: {
        const double opt = true_optimism_oracle(loss_, refit.fhat, fstar_preds, noise);
        return {std::abs(opt), cert.wild_optimism_abs + cert.pilot + cert.deviation};
      }
      case TheoremCheck::thm_5_1_excess: {
        OracleContext oracle{fstar_preds, noise, fdagger, w_inf};
        return {realized_excess_risk(loss_, data, refit.fhat, oracle), cert.total};
      }
      case TheoremCheck::thm_5_2_excess: {
        const StabilityConstants consts = stability_constants(loss_, set_, n);
        const RiskCertificate rcert = random_design_certificate(cert, consts, n, cfg_.delta);
        // E[l(Y, fhat(X))] - E[l(Y, f*(X))] = E[D_phi(f*(X), fhat(X))] because E[Y | X] = f*(X).
        Engine engine = make_engine(derive_seed(rep_seed, Stream::holdout));
        const Matrix x_new = model_.sample_inputs(cfg_.holdout, engine);
        const double excess = empirical_discrepancy(loss_, model_.fstar(x_new), fit->model.predict_all(x_new));
        return {excess, rcert.total};
      }
      default: break;
    }
    throw InvalidInput("unhandled theorem");
  }

 private:
  const PredictionMatrix& cached_dagger(const FixedDesignDataset& data) {
    if (!dagger_) dagger_ = trainer_->fit(data.with_responses(fixed_fstar_));
    return *dagger_;
  }

  const ExperimentConfig& cfg_;
  BregmanLoss loss_;
  CompactSet set_;
  std::unique_ptr<Trainer> trainer_;
  SyntheticModel model_;
  const LinearTrainer* linear_ = nullptr;
  Matrix fixed_inputs_;
  Matrix fixed_fstar_;
  std::optional<PredictionMatrix> dagger_;
};

}  // namespace

CoverageReport run_coverage(const ExperimentConfig& config) {
  if (config.reps < 1) throw InvalidInput("run_coverage: reps must be positive");
  if (config.theorem != TheoremCheck::lemma_5_1 && config.reps < 100)
    throw InvalidInput("run_coverage: probabilistic checks need at least 100 replications");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw InvalidInput("run_coverage: delta must lie in (0, 1)");
  if (config.spec.n < 2) throw InvalidInput("run_coverage: n must be at least 2");

  Experiment experiment(config);
  CoverageReport report;
  report.theorem = config.theorem;
  report.replications = config.reps;
  report.target_coverage = target_coverage(config.theorem, config.delta);
  const double tol = config.theorem == TheoremCheck::lemma_5_1 ? config.lemma_tol : 0.0;

  for (int rep = 0; rep < config.reps; ++rep) {
    ReplicationRecord rec;
    rec.rep = rep;
    rec.seed = derive_seed(config.spec.seed, Stream::replication, static_cast<std::uint64_t>(rep));
    try {
      const Claim claim = experiment.run(rec.seed);
      rec.lhs = claim.lhs;
      rec.rhs = claim.rhs;
      rec.holds = claim.lhs <= claim.rhs + tol;
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.holds = false;
    }
    if (!rec.error.empty()) {
      ++report.errors;
    } else if (rec.holds) {
      ++report.successes;
    }
    report.per_replication.push_back(std::move(rec));
  }

  const double reps = static_cast<double>(report.replications);
  const double t = report.target_coverage;
  report.empirical_coverage = static_cast<double>(report.successes) / reps;
  report.pass_threshold = config.theorem == TheoremCheck::lemma_5_1 ? 1.0 : t - 2.0 * std::sqrt(t * (1.0 - t) / reps);
  report.passed = report.errors == 0 && report.empirical_coverage >= report.pass_threshold;
  return report;
}

}  // namespace wildrefit
