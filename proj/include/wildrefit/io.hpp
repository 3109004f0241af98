#pragma once

#include <string>
#include <vector>

#include "wildrefit/certify.hpp"
#include "wildrefit/harness.hpp"

namespace wildrefit {

// Shortest decimal string that parses back to the same double.
std::string format_number(double x);

// CSV with header x_1..x_p,y_1..y_d.
std::string dataset_to_csv(const FixedDesignDataset& data);
FixedDesignDataset dataset_from_csv(const std::string& text);
void save_dataset_csv(const std::string& path, const FixedDesignDataset& data);
FixedDesignDataset load_dataset_csv(const std::string& path);

// Oracle columns fstar_1..fstar_d,w_1..w_d, one row per design point.
std::string oracle_to_csv(const OracleContext& oracle);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// Potential and compact-set descriptors, shared by the CLI and config files:
//   potential "squared_l2", "sqrt_bernoulli:eps0=0.1", "clipped_simplex_kl:eta0=0.05"
//   set       "default", "default:10", "box:LO:HI", "simplex:ETA"
PotentialSpec parse_potential_spec(const std::string& text);
std::string format_potential_spec(const PotentialSpec& spec);
CompactSet parse_compact_set(const std::string& text, const Potential& potential);
std::string describe_compact_set(const CompactSet& set);

// Manifest: n, d, p, seed, potential, plus the synthetic model description and w_inf.
std::string manifest_json(const SyntheticSpec& spec, const OracleContext& oracle);

struct RefitContext {
  PotentialSpec potential;
  std::string set = "default";
  TrainerSpec trainer;
};

// Refit JSON carries every WildRefitResult field plus the wild optimism and wild radius.
std::string refit_to_json(const WildRefitResult& result, const RefitContext& context,
                          const CalibrationResult* calibration = nullptr);
WildRefitResult refit_from_json(const std::string& text, RefitContext* context = nullptr);

std::string radius_report_to_json(const RadiusReport& report, const std::string& extra_json = "{}");
RadiusReport radius_report_from_json(const std::string& text);

std::string certificate_to_json(const RiskCertificate& cert);

ExperimentConfig experiment_from_json(const std::string& text, const ExperimentConfig& defaults = {});
std::string experiment_to_json(const ExperimentConfig& config);

// Defaults for each check at desk scale.
ExperimentConfig default_experiment(TheoremCheck theorem);

// Config file: either one experiment object or {"experiments": [...]}; top-level keys
// outside "experiments" act as shared defaults.
std::vector<ExperimentConfig> experiments_from_config(const std::string& text);

std::string coverage_to_json(const std::vector<ExperimentConfig>& configs, const std::vector<CoverageReport>& reports);
std::string replications_to_csv(const CoverageReport& report);
std::string coverage_summary(const std::vector<ExperimentConfig>& configs, const std::vector<CoverageReport>& reports);

// coverage.json, replications_<theorem>.csv per experiment (a _2, _3 suffix for repeats),
// summary.txt. No timestamps.
void write_validation_outputs(const std::string& dir, const std::vector<ExperimentConfig>& configs,
                              const std::vector<CoverageReport>& reports);

}  // namespace wildrefit
