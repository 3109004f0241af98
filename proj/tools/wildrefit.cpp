#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wildrefit/certify.hpp"
#include "wildrefit/complexity.hpp"
#include "wildrefit/harness.hpp"
#include "wildrefit/io.hpp"
#include "wildrefit/wildfit.hpp"

namespace wr = wildrefit;

namespace {

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    wr::write_text_file(out, text);
  }
}

struct SimulateArgs {
  std::string config;
  std::string out_dir = "sim";
  std::optional<long> n, d, p;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> potential, design, fstar, noise;
  std::optional<double> amplitude;
};

int run_simulate(const SimulateArgs& a) {
  wr::ExperimentConfig c = wr::default_experiment(wr::TheoremCheck::thm_5_1_excess);
  if (!a.config.empty()) c = wr::experiment_from_json(wr::read_text_file(a.config), c);
  wr::SyntheticSpec& s = c.spec;
  if (a.n) s.n = *a.n;
  if (a.d) s.d = *a.d;
  if (a.p) s.p = *a.p;
  if (a.seed) s.seed = *a.seed;
  if (a.potential) s.potential = wr::parse_potential_spec(*a.potential);
  if (a.design) s.design = wr::design_kind_from_string(*a.design);
  if (a.fstar) s.fstar.family = wr::fstar_family_from_string(*a.fstar);
  if (a.noise) s.noise.family = wr::noise_family_from_string(*a.noise);
  if (a.amplitude) s.noise.amplitude = *a.amplitude;
  const auto [data, oracle] = wr::generate_synthetic(s);
  const std::filesystem::path dir(a.out_dir);
  std::filesystem::create_directories(dir);
  wr::save_dataset_csv((dir / "data.csv").string(), data);
  wr::write_text_file((dir / "manifest.json").string(), wr::manifest_json(s, oracle));
  wr::write_text_file((dir / "oracle.csv").string(), wr::oracle_to_csv(oracle));
  std::cerr << "wrote " << data.n() << " rows to " << (dir / "data.csv").string() << "\n";
  return 0;
}

struct RefitArgs {
  std::string data;
  std::string potential = "squared_l2";
  std::string set = "default";
  std::string trainer = "saturated";
  int max_iters = 0;
  double tol = 0.0;
  std::optional<double> rho;
  std::optional<double> target_radius;
  std::uint64_t seed = 0;
  std::string out;
};

int run_refit(const RefitArgs& a) {
  const wr::FixedDesignDataset data = wr::load_dataset_csv(a.data);
  wr::RefitContext ctx;
  ctx.potential = wr::parse_potential_spec(a.potential);
  const wr::BregmanLoss loss(wr::builtin_potential(ctx.potential, static_cast<int>(data.d())));
  const wr::CompactSet set = wr::parse_compact_set(a.set, loss.potential());
  ctx.set = wr::describe_compact_set(set);
  ctx.trainer.kind = a.trainer;
  ctx.trainer.max_iters = a.max_iters;
  ctx.trainer.tol = a.tol;
  ctx.trainer.seed = a.seed;
  const auto trainer = wr::make_trainer(ctx.trainer, loss, set);
  if (a.rho.has_value() == a.target_radius.has_value())
    throw wr::InvalidInput("refit: give exactly one of --rho and --target-radius");
  if (a.rho) {
    const wr::WildRefitResult result = wr::wild_refit(*trainer, data, *a.rho, a.seed);
    emit(a.out, wr::refit_to_json(result, ctx));
  } else {
    wr::CalibrationOptions opts;
    opts.seed = a.seed;
    const wr::CalibrationResult cal = wr::calibrate_rho(*trainer, data, *a.target_radius, opts);
    emit(a.out, wr::refit_to_json(cal.result, ctx, &cal));
  }
  return 0;
}

struct Loaded {
  wr::WildRefitResult refit;
  wr::RefitContext ctx;
};

Loaded load_refit(const std::string& path) {
  Loaded l;
  l.refit = wr::refit_from_json(wr::read_text_file(path), &l.ctx);
  return l;
}

struct RadiusArgs {
  std::string data;
  std::string refit;
  std::string mode = "fixed-point";
  double delta = std::exp(-9.0);
  std::optional<double> pilot;
  std::optional<double> w_inf;
  std::string out;
};

int run_radius(const RadiusArgs& a) {
  const Loaded l = load_refit(a.refit);
  const auto& r = l.refit;
  if (!a.data.empty()) {
    const wr::FixedDesignDataset data = wr::load_dataset_csv(a.data);
    if (data.responses() != r.responses) throw wr::InvalidInput("radius: --data does not match the refit responses");
  }
  const wr::BregmanLoss loss(wr::builtin_potential(l.ctx.potential, static_cast<int>(r.fhat.d())));
  const wr::CompactSet set = wr::parse_compact_set(l.ctx.set, loss.potential());
  const wr::WnEvaluator eval = wr::make_wn_evaluator(loss, set, r.fhat, r.symmetrized_residues());
  wr::RadiusSearchOptions opts;
  opts.r_max = wr::radius_scale(loss, set);

  wr::RadiusReport report;
  report.r_diamond_rho = wr::wild_radius(loss, r);
  nlohmann::ordered_json extra;
  extra["delta"] = a.delta;
  extra["mode"] = a.mode;
  const auto method = wr::radius_method_from_string(a.mode);
  if (method == wr::RadiusMethod::fixed_point) {
    report.r_certified = wr::fixed_point_radius(eval, a.delta, r.fhat.n(), opts);
  } else if (method == wr::RadiusMethod::convex_class_bound) {
    const double w_inf = a.w_inf ? *a.w_inf : r.residues.cwiseAbs().maxCoeff();
    const double pilot = a.pilot ? *a.pilot : 0.0;
    const wr::RhatBound b = wr::rhat_bound_convex(loss, eval, report.r_diamond_rho, a.delta, r.fhat.n(), w_inf,
                                                  r.fhat.d(), pilot, opts);
    report.r_certified = b.bound;
    extra["bracket"] = b.bracket;
    extra["w_inf"] = w_inf;
    extra["w_inf_source"] = a.w_inf ? "supplied" : "plug-in max |residue|";
    extra["pilot"] = pilot;
    extra["pilot_source"] = a.pilot ? "supplied" : "plug-in default 0";
    extra["deviation_t"] = "sqrt(log(1/delta))";
  } else {
    throw wr::InvalidInput("radius: --mode must be fixed-point or convex-class");
  }
  report.r_hat_n = report.r_certified;
  report.method = method;
  extra["target_wild_radius"] = 3.0 * loss.c0() * report.r_certified;
  emit(a.out, wr::radius_report_to_json(report, extra.dump()));
  return 0;
}

struct CertifyArgs {
  std::string mode = "fixed";
  double delta = 0.05;
  std::string refit;
  std::string radius;
  std::optional<double> pilot;
  std::optional<double> misspec;
  std::optional<double> w_inf;
  std::string out;
};

int run_certify(const CertifyArgs& a) {
  const Loaded l = load_refit(a.refit);
  const wr::RadiusReport report = wr::radius_report_from_json(wr::read_text_file(a.radius));
  const wr::BregmanLoss loss(wr::builtin_potential(l.ctx.potential, static_cast<int>(l.refit.fhat.d())));
  const auto src = [](const std::optional<double>& v) {
    return v ? wr::InputSource::supplied : wr::InputSource::plug_in_default;
  };
  const wr::SourcedValue pilot{a.pilot.value_or(0.0), src(a.pilot)};
  const wr::SourcedValue misspec{a.misspec.value_or(0.0), src(a.misspec)};
  const wr::SourcedValue w_inf{a.w_inf.value_or(l.refit.residues.cwiseAbs().maxCoeff()), src(a.w_inf)};
  wr::RiskCertificate cert = wr::fixed_design_certificate(loss, l.refit, report, a.delta, pilot, misspec, w_inf);
  if (a.mode == "random") {
    const wr::CompactSet set = wr::parse_compact_set(l.ctx.set, loss.potential());
    const wr::StabilityConstants consts = wr::stability_constants(loss, set, l.refit.fhat.n());
    cert = wr::random_design_certificate(cert, consts, l.refit.fhat.n(), a.delta);
  } else if (a.mode != "fixed") {
    throw wr::InvalidInput("certify: --mode must be fixed or random");
  }
  emit(a.out, wr::certificate_to_json(cert));
  return 0;
}

struct ValidateArgs {
  std::vector<std::string> theorems;
  std::optional<int> reps;
  std::optional<double> delta;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "validation";
};

int run_validate(const ValidateArgs& a) {
  std::vector<wr::ExperimentConfig> configs;
  if (!a.config.empty()) configs = wr::experiments_from_config(wr::read_text_file(a.config));
  if (!a.theorems.empty()) {
    std::vector<wr::ExperimentConfig> chosen;
    for (const auto& name : a.theorems) {
      if (name == "all") {
        for (auto t : {wr::TheoremCheck::lemma_5_1, wr::TheoremCheck::thm_5_1_optimism,
                       wr::TheoremCheck::thm_5_1_excess, wr::TheoremCheck::thm_6_1_rhat,
                       wr::TheoremCheck::thm_5_2_excess})
          chosen.push_back(wr::default_experiment(t));
        continue;
      }
      const auto t = wr::theorem_from_string(name);
      bool found = false;
      for (const auto& c : configs) {
        if (c.theorem == t) {
          chosen.push_back(c);
          found = true;
        }
      }
      if (!found) chosen.push_back(wr::default_experiment(t));
    }
    configs = chosen;
  }
  if (configs.empty()) throw wr::InvalidInput("validate: give --theorem or --config");
  for (auto& c : configs) {
    if (a.reps) c.reps = *a.reps;
    if (a.delta) c.delta = *a.delta;
    if (a.seed) c.spec.seed = *a.seed;
  }
  std::vector<wr::CoverageReport> reports;
  for (const auto& c : configs) {
    std::cerr << "running " << wr::to_string(c.theorem) << " (" << c.reps << " replications)\n";
    reports.push_back(wr::run_coverage(c));
  }
  wr::write_validation_outputs(a.out, configs, reports);
  std::cout << wr::coverage_summary(configs, reports);
  for (const auto& r : reports)
    if (!r.passed) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wild refitting under Bregman losses: refits, radii, risk certificates and coverage checks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset with its oracle manifest");
  simulate->add_option("--config", sim.config, "Experiment-style JSON with the synthetic spec");
  simulate->add_option("--out-dir", sim.out_dir, "Directory for data.csv, manifest.json and oracle.csv");
  simulate->add_option("--n", sim.n, "Number of design points");
  simulate->add_option("--d", sim.d, "Response dimension");
  simulate->add_option("--p", sim.p, "Number of features");
  simulate->add_option("--seed", sim.seed, "Root seed");
  simulate->add_option("--potential", sim.potential, "kind[:param=value]");
  simulate->add_option("--design", sim.design, "fixed | random");
  simulate->add_option("--fstar", sim.fstar, "constant | linear | nonlinear");
  simulate->add_option("--noise", sim.noise, "uniform | scaled_rademacher | heteroskedastic");
  simulate->add_option("--amplitude", sim.amplitude, "Noise amplitude");

  RefitArgs ref;
  auto* refit = app.add_subcommand("refit", "Fit, symmetrize residues and refit on wild responses");
  refit->add_option("--data", ref.data, "Dataset CSV")->required();
  refit->add_option("--potential", ref.potential, "kind[:param=value]");
  refit->add_option("--set", ref.set, "default[:B] | box:LO:HI | simplex:ETA");
  refit->add_option("--trainer", ref.trainer, "saturated | linear");
  refit->add_option("--max-iters", ref.max_iters, "Trainer iteration cap (0: default)");
  refit->add_option("--tol", ref.tol, "Trainer tolerance (0: default)");
  auto* rho_opt = refit->add_option("--rho", ref.rho, "Noise scale");
  refit->add_option("--target-radius", ref.target_radius, "Calibrate rho so that sqrt(L_n(fhat, fdiamond)) hits this")
      ->excludes(rho_opt);
  refit->add_option("--seed", ref.seed, "Seed for the Rademacher signs");
  refit->add_option("--out", ref.out, "Output JSON (default stdout)");

  RadiusArgs rad;
  auto* radius = app.add_subcommand("radius", "Radius for the certificate from a refit result");
  radius->add_option("--data", rad.data, "Dataset CSV (checked against the refit)");
  radius->add_option("--refit-result", rad.refit, "Refit JSON")->required();
  radius->add_option("--mode", rad.mode, "fixed-point | convex-class");
  radius->add_option("--delta", rad.delta, "Failure probability (at most e^-9)");
  radius->add_option("--pilot", rad.pilot, "Pilot error (convex-class; default 0)");
  radius->add_option("--w-inf", rad.w_inf, "Noise sup-norm (convex-class; default max |residue|)");
  radius->add_option("--out", rad.out, "Output JSON (default stdout)");

  CertifyArgs cer;
  auto* certify = app.add_subcommand("certify", "Assemble an excess-risk certificate");
  certify->add_option("--mode", cer.mode, "fixed | random");
  certify->add_option("--delta", cer.delta, "Failure probability");
  certify->add_option("--refit-result", cer.refit, "Refit JSON calibrated to 3 sqrt(beta/alpha) r")->required();
  certify->add_option("--radius-report", cer.radius, "Radius JSON")->required();
  certify->add_option("--pilot", cer.pilot, "Pilot error (default 0, flagged)");
  certify->add_option("--misspec", cer.misspec, "Misspecification term (default 0, flagged)");
  certify->add_option("--w-inf", cer.w_inf, "Noise sup-norm (default max |residue|, flagged)");
  certify->add_option("--out", cer.out, "Output JSON (default stdout)");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Monte Carlo coverage of the lemma and theorem claims");
  validate->add_option("--theorem", val.theorems,
                       "lemma_5_1 | thm_5_1_optimism | thm_5_1_excess | thm_6_1_rhat | thm_5_2_excess | all");
  validate->add_option("--reps", val.reps, "Replications per check");
  validate->add_option("--delta", val.delta, "Failure probability");
  validate->add_option("--seed", val.seed, "Root seed");
  validate->add_option("--config", val.config, "Experiment JSON");
  validate->add_option("--out", val.out, "Output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*simulate) return run_simulate(sim);
    if (*refit) return run_refit(ref);
    if (*radius) return run_radius(rad);
    if (*certify) return run_certify(cer);
    if (*validate) return run_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
