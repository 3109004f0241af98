#include "wildrefit/io.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <variant>

#include "json.hpp"

namespace wildrefit {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& raw, const std::string& where) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw InvalidInput("cannot parse number '" + s + "' in " + where);
  return v;
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw InvalidInput(std::string("refit JSON: ") + what + " must be a non-empty array");
  const auto n = static_cast<Eigen::Index>(j.size());
  const auto d = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != d) throw InvalidInput(std::string("refit JSON: ragged ") + what);
    for (Eigen::Index k = 0; k < d; ++k) m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
  }
  return m;
}

ordered_json trainer_json(const TrainerSpec& t) {
  return ordered_json{{"kind", t.kind},
                      {"max_iters", t.max_iters},
                      {"tol", t.tol},
                      {"step_policy", t.step_policy},
                      {"seed", t.seed}};
}

TrainerSpec trainer_from_json(const json& j, TrainerSpec t = {}) {
  if (j.is_string()) {
    t.kind = j.get<std::string>();
    return t;
  }
  t.kind = j.value("kind", t.kind);
  t.max_iters = j.value("max_iters", t.max_iters);
  t.tol = j.value("tol", t.tol);
  t.step_policy = j.value("step_policy", t.step_policy);
  t.seed = j.value("seed", t.seed);
  return t;
}

PotentialSpec potential_from_json(const json& j) {
  if (j.is_string()) return parse_potential_spec(j.get<std::string>());
  PotentialSpec s;
  s.kind = potential_kind_from_string(j.at("kind").get<std::string>());
  s.eps0 = j.value("eps0", s.eps0);
  s.eta0 = j.value("eta0", s.eta0);
  return s;
}

ordered_json potential_json(const PotentialSpec& s) {
  ordered_json j{{"kind", to_string(s.kind)}};
  if (s.kind == PotentialKind::sqrt_bernoulli) j["eps0"] = s.eps0;
  if (s.kind == PotentialKind::clipped_simplex_kl) j["eta0"] = s.eta0;
  return j;
}

std::string vector_text(const Vector& v) {
  if ((v.array() == v[0]).all()) return format_number(v[0]);
  std::string out;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    if (j) out += ",";
    out += format_number(v[j]);
  }
  return out;
}

Vector vector_from_text(const std::string& text, int dim) {
  const auto parts = split(text, ',');
  if (parts.size() == 1) return Vector::Constant(dim, parse_number(parts[0], "set bound"));
  if (static_cast<int>(parts.size()) != dim) throw InvalidInput("set bound has " + std::to_string(parts.size()) +
                                                                " entries, expected " + std::to_string(dim));
  Vector v(dim);
  for (int j = 0; j < dim; ++j) v[j] = parse_number(parts[static_cast<std::size_t>(j)], "set bound");
  return v;
}

void write_file_or_throw(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string dataset_to_csv(const FixedDesignDataset& data) {
  std::string out;
  for (Eigen::Index k = 0; k < data.p(); ++k) out += "x_" + std::to_string(k + 1) + ",";
  for (Eigen::Index j = 0; j < data.d(); ++j) out += (j ? ",y_" : "y_") + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index k = 0; k < data.p(); ++k) out += format_number(data.inputs()(i, k)) + ",";
    for (Eigen::Index j = 0; j < data.d(); ++j) {
      if (j) out += ",";
      out += format_number(data.responses()(i, j));
    }
    out += "\n";
  }
  return out;
}

FixedDesignDataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("dataset CSV is empty");
  const auto header = split(trim(line), ',');
  Eigen::Index p = 0;
  Eigen::Index d = 0;
  for (const auto& raw : header) {
    const std::string h = trim(raw);
    const bool is_x = h.rfind("x_", 0) == 0;
    const bool is_y = h.rfind("y_", 0) == 0;
    if (is_x && d > 0) throw InvalidInput("dataset CSV: x columns must precede y columns");
    if (is_x && h == "x_" + std::to_string(p + 1)) {
      ++p;
    } else if (is_y && h == "y_" + std::to_string(d + 1)) {
      ++d;
    } else {
      throw InvalidInput("dataset CSV: unexpected header column '" + h + "'");
    }
  }
  if (d == 0) throw InvalidInput("dataset CSV: no y columns");
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (static_cast<Eigen::Index>(cells.size()) != p + d)
      throw InvalidInput("dataset CSV: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                         " fields, expected " + std::to_string(p + d));
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(parse_number(c, "dataset CSV line " + std::to_string(lineno)));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix x(n, p);
  Matrix y(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) x(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < d; ++j)
      y(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(p + j)];
  }
  return FixedDesignDataset(std::move(x), std::move(y));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) { write_file_or_throw(path, text); }

void save_dataset_csv(const std::string& path, const FixedDesignDataset& data) {
  write_text_file(path, dataset_to_csv(data));
}

FixedDesignDataset load_dataset_csv(const std::string& path) { return dataset_from_csv(read_text_file(path)); }

std::string oracle_to_csv(const OracleContext& oracle) {
  const Matrix& f = oracle.fstar_preds.values;
  const Matrix& w = oracle.noise;
  require_same_shape(f, w, "oracle CSV");
  std::string out;
  for (Eigen::Index j = 0; j < f.cols(); ++j) out += "fstar_" + std::to_string(j + 1) + ",";
  for (Eigen::Index j = 0; j < w.cols(); ++j) out += (j ? ",w_" : "w_") + std::to_string(j + 1);
  out += "\n";
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.cols(); ++j) out += format_number(f(i, j)) + ",";
    for (Eigen::Index j = 0; j < w.cols(); ++j) out += (j ? "," : "") + format_number(w(i, j));
    out += "\n";
  }
  return out;
}

PotentialSpec parse_potential_spec(const std::string& text) {
  const auto colon = text.find(':');
  PotentialSpec spec;
  spec.kind = potential_kind_from_string(trim(text.substr(0, colon)));
  if (colon == std::string::npos) return spec;
  for (const auto& kv : split(text.substr(colon + 1), ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidInput("potential parameter '" + kv + "' is not key=value");
    const std::string key = trim(kv.substr(0, eq));
    const double value = parse_number(kv.substr(eq + 1), "potential parameter " + key);
    if (key == "eps0" && spec.kind == PotentialKind::sqrt_bernoulli) {
      spec.eps0 = value;
    } else if (key == "eta0" && spec.kind == PotentialKind::clipped_simplex_kl) {
      spec.eta0 = value;
    } else {
      throw InvalidInput("potential " + to_string(spec.kind) + " has no parameter '" + key + "'");
    }
  }
  return spec;
}

std::string format_potential_spec(const PotentialSpec& spec) {
  switch (spec.kind) {
    case PotentialKind::squared_l2: return "squared_l2";
    case PotentialKind::sqrt_bernoulli: return "sqrt_bernoulli:eps0=" + format_number(spec.eps0);
    case PotentialKind::clipped_simplex_kl: return "clipped_simplex_kl:eta0=" + format_number(spec.eta0);
  }
  return "squared_l2";
}

CompactSet parse_compact_set(const std::string& text, const Potential& potential) {
  const auto parts = split(trim(text), ':');
  const std::string kind = parts[0];
  if (kind == "default" && parts.size() <= 2) {
    const double bound = parts.size() == 2 ? parse_number(parts[1], "set bound") : 10.0;
    return default_compact_set(potential, bound);
  }
  if (kind == "box" && parts.size() == 3) {
    return CompactSet::box(vector_from_text(parts[1], potential.dim()), vector_from_text(parts[2], potential.dim()));
  }
  if (kind == "simplex" && parts.size() == 2) {
    return CompactSet::clipped_simplex(potential.dim(), parse_number(parts[1], "simplex eta"));
  }
  throw InvalidInput("cannot parse compact set '" + text + "' (use default[:B], box:LO:HI or simplex:ETA)");
}

std::string describe_compact_set(const CompactSet& set) {
  if (const auto* s = std::get_if<ClippedSimplex>(&set.region())) return "simplex:" + format_number(s->eta);
  const auto& b = std::get<Box>(set.region());
  return "box:" + vector_text(b.lo) + ":" + vector_text(b.hi);
}

std::string manifest_json(const SyntheticSpec& spec, const OracleContext& oracle) {
  ordered_json j;
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["p"] = spec.p;
  j["seed"] = spec.seed;
  j["potential"] = potential_json(spec.potential);
  j["design"] = to_string(spec.design);
  ordered_json f{{"family", to_string(spec.fstar.family)}};
  if (spec.fstar.offset) f["offset"] = *spec.fstar.offset;
  if (spec.fstar.scale) f["scale"] = *spec.fstar.scale;
  j["fstar"] = f;
  j["noise"] = ordered_json{{"family", to_string(spec.noise.family)},
                            {"amplitude", spec.noise.amplitude},
                            {"amplitudes", spec.noise.amplitudes}};
  j["w_inf"] = oracle.w_inf;
  return j.dump(2) + "\n";
}

std::string refit_to_json(const WildRefitResult& result, const RefitContext& context,
                          const CalibrationResult* calibration) {
  const Potential potential = builtin_potential(context.potential, static_cast<int>(result.fhat.d()));
  const BregmanLoss loss(potential);
  ordered_json j;
  j["potential"] = potential_json(context.potential);
  j["set"] = context.set;
  j["trainer"] = trainer_json(context.trainer);
  j["n"] = result.fhat.n();
  j["d"] = result.fhat.d();
  j["rho"] = result.rho;
  j["sign_seed"] = result.signs.seed;
  j["clipped_rows"] = result.clipped_rows;
  j["wild_optimism"] = wild_optimism(loss, result);
  j["wild_radius"] = wild_radius(loss, result);
  j["training_error"] = empirical_discrepancy(loss, result.responses, result.fhat.values);
  if (calibration != nullptr) {
    ordered_json trace = ordered_json::array();
    for (const auto& t : calibration->trace) trace.push_back({t.argument, t.value});
    j["calibration"] = ordered_json{{"achieved_radius", calibration->achieved_radius},
                                    {"used_grid_fallback", calibration->used_grid_fallback},
                                    {"trace", trace}};
  }
  j["responses"] = matrix_json(result.responses);
  j["fhat"] = matrix_json(result.fhat.values);
  j["fdiamond"] = matrix_json(result.fdiamond.values);
  j["wild_responses"] = matrix_json(result.wild_responses);
  j["residues"] = matrix_json(result.residues);
  j["signs"] = matrix_json(result.signs.values);
  return j.dump(2) + "\n";
}

WildRefitResult refit_from_json(const std::string& text, RefitContext* context) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("refit JSON: ") + e.what());
  }
  try {
    WildRefitResult r;
    r.responses = matrix_from_json(j.at("responses"), "responses");
    r.fhat.values = matrix_from_json(j.at("fhat"), "fhat");
    r.fdiamond.values = matrix_from_json(j.at("fdiamond"), "fdiamond");
    r.wild_responses = matrix_from_json(j.at("wild_responses"), "wild_responses");
    r.residues = matrix_from_json(j.at("residues"), "residues");
    r.signs.values = matrix_from_json(j.at("signs"), "signs");
    r.signs.seed = j.at("sign_seed").get<std::uint64_t>();
    r.rho = j.at("rho").get<double>();
    r.clipped_rows = j.value("clipped_rows", 0);
    for (const Matrix* m : {&r.fhat.values, &r.fdiamond.values, &r.wild_responses, &r.residues, &r.signs.values})
      require_same_shape(r.responses, *m, "refit JSON");
    if (context != nullptr) {
      context->potential = potential_from_json(j.at("potential"));
      context->set = j.value("set", std::string("default"));
      if (j.contains("trainer")) context->trainer = trainer_from_json(j.at("trainer"));
    }
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("refit JSON: ") + e.what());
  }
}

std::string radius_report_to_json(const RadiusReport& report, const std::string& extra_json) {
  ordered_json j;
  j["r_hat_n"] = report.r_hat_n;
  j["r_diamond_rho"] = report.r_diamond_rho;
  j["r_certified"] = report.r_certified;
  j["method"] = to_string(report.method);
  const json extra = json::parse(extra_json);
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = *it;
  return j.dump(2) + "\n";
}

RadiusReport radius_report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RadiusReport r;
    r.r_hat_n = j.at("r_hat_n").get<double>();
    r.r_diamond_rho = j.at("r_diamond_rho").get<double>();
    r.r_certified = j.at("r_certified").get<double>();
    r.method = radius_method_from_string(j.at("method").get<std::string>());
    if (r.r_hat_n < 0.0 || r.r_diamond_rho < 0.0 || r.r_certified < 0.0)
      throw InvalidInput("radius report: radii must be >= 0");
    return r;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("radius report JSON: ") + e.what());
  }
}

std::string certificate_to_json(const RiskCertificate& cert) {
  ordered_json j;
  j["mode"] = to_string(cert.mode);
  j["total"] = cert.total;
  j["training_error"] = cert.training_error;
  j["wild_optimism_abs"] = cert.wild_optimism_abs;
  j["pilot"] = cert.pilot;
  j["deviation"] = cert.deviation;
  j["stability_addend"] = cert.stability_addend;
  j["delta"] = cert.delta;
  j["failure_budget"] = cert.failure_budget;
  ordered_json prov = ordered_json::object();
  for (const auto& [k, v] : cert.provenance) prov[k] = v;
  j["provenance"] = prov;
  return j.dump(2) + "\n";
}

ExperimentConfig default_experiment(TheoremCheck theorem) {
  ExperimentConfig c;
  c.theorem = theorem;
  c.spec.n = 200;
  c.spec.d = 2;
  c.spec.p = 2;
  c.spec.seed = 20240601;
  c.spec.fstar.family = FstarFamily::linear;
  c.spec.noise.family = NoiseFamily::uniform;
  c.spec.noise.amplitude = 0.5;
  c.trainer.kind = "saturated";
  switch (theorem) {
    case TheoremCheck::lemma_5_1:
      // The saturated fit reproduces interior responses, so residues live only on rows
      // clipped to the box; a tight box and wide noise keep the check from being vacuous.
      c.reps = 500;
      c.set_bound = 0.5;
      c.spec.noise.amplitude = 1.0;
      break;
    case TheoremCheck::thm_5_1_optimism:
    case TheoremCheck::thm_5_1_excess:
      // Calibrating to 3 sqrt(beta/alpha) r needs residues on every row, hence the linear class.
      c.reps = 500;
      c.delta = 0.05;
      c.trainer.kind = "linear";
      break;
    case TheoremCheck::thm_6_1_rhat:
      c.reps = 200;
      c.delta = std::exp(-9.0);
      break;
    case TheoremCheck::thm_5_2_excess:
      c.reps = 300;
      c.delta = 0.05;
      c.spec.design = DesignKind::random;
      c.trainer.kind = "linear";
      break;
  }
  return c;
}

namespace {

void apply_experiment_json(const json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw InvalidInput("experiment config: expected a JSON object");
  if (j.contains("theorem")) c.theorem = theorem_from_string(j.at("theorem").get<std::string>());
  c.reps = j.value("reps", c.reps);
  c.delta = j.value("delta", c.delta);
  c.spec.seed = j.value("seed", c.spec.seed);
  c.spec.n = j.value("n", c.spec.n);
  c.spec.d = j.value("d", c.spec.d);
  c.spec.p = j.value("p", c.spec.p);
  if (j.contains("design")) c.spec.design = design_kind_from_string(j.at("design").get<std::string>());
  if (j.contains("potential")) c.spec.potential = potential_from_json(j.at("potential"));
  if (j.contains("fstar")) {
    const json& f = j.at("fstar");
    if (f.contains("family")) c.spec.fstar.family = fstar_family_from_string(f.at("family").get<std::string>());
    if (f.contains("offset")) c.spec.fstar.offset = f.at("offset").get<double>();
    if (f.contains("scale")) c.spec.fstar.scale = f.at("scale").get<double>();
  }
  if (j.contains("noise")) {
    const json& w = j.at("noise");
    if (w.contains("family")) c.spec.noise.family = noise_family_from_string(w.at("family").get<std::string>());
    c.spec.noise.amplitude = w.value("amplitude", c.spec.noise.amplitude);
    if (w.contains("amplitudes")) c.spec.noise.amplitudes = w.at("amplitudes").get<std::vector<double>>();
  }
  if (j.contains("trainer")) c.trainer = trainer_from_json(j.at("trainer"), c.trainer);
  if (j.contains("radius_policy"))
    c.radius_policy = radius_policy_from_string(j.at("radius_policy").get<std::string>());
  c.radius_delta = j.value("radius_delta", c.radius_delta);
  c.rho = j.value("rho", c.rho);
  c.holdout = j.value("holdout", c.holdout);
  c.set_bound = j.value("set_bound", c.set_bound);
  c.lemma_tol = j.value("lemma_tol", c.lemma_tol);
}

json parse_config(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
}

ordered_json experiment_json(const ExperimentConfig& c) {
  ordered_json j;
  j["theorem"] = to_string(c.theorem);
  j["reps"] = c.reps;
  j["delta"] = c.delta;
  j["seed"] = c.spec.seed;
  j["n"] = c.spec.n;
  j["d"] = c.spec.d;
  j["p"] = c.spec.p;
  j["design"] = to_string(c.spec.design);
  j["potential"] = potential_json(c.spec.potential);
  ordered_json f{{"family", to_string(c.spec.fstar.family)}};
  if (c.spec.fstar.offset) f["offset"] = *c.spec.fstar.offset;
  if (c.spec.fstar.scale) f["scale"] = *c.spec.fstar.scale;
  j["fstar"] = f;
  j["noise"] = ordered_json{{"family", to_string(c.spec.noise.family)},
                            {"amplitude", c.spec.noise.amplitude},
                            {"amplitudes", c.spec.noise.amplitudes}};
  j["trainer"] = trainer_json(c.trainer);
  j["radius_policy"] = to_string(c.radius_policy);
  j["radius_delta"] = c.radius_delta;
  j["rho"] = c.rho;
  j["holdout"] = c.holdout;
  j["set_bound"] = c.set_bound;
  j["lemma_tol"] = c.lemma_tol;
  return j;
}

ordered_json report_json(const CoverageReport& r) {
  ordered_json j;
  j["theorem"] = to_string(r.theorem);
  j["replications"] = r.replications;
  j["successes"] = r.successes;
  j["errors"] = r.errors;
  j["empirical_coverage"] = r.empirical_coverage;
  j["target_coverage"] = r.target_coverage;
  j["pass_threshold"] = r.pass_threshold;
  j["passed"] = r.passed;
  ordered_json recs = ordered_json::array();
  for (const auto& rec : r.per_replication) {
    recs.push_back(ordered_json{{"rep", rec.rep},
                                {"seed", rec.seed},
                                {"lhs", rec.lhs},
                                {"rhs", rec.rhs},
                                {"holds", rec.holds},
                                {"error", rec.error}});
  }
  j["per_replication"] = recs;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

void require_matching(const std::vector<ExperimentConfig>& configs, const std::vector<CoverageReport>& reports) {
  if (configs.size() != reports.size()) throw InvalidInput("validation outputs: one report per experiment expected");
}

}  // namespace

ExperimentConfig experiment_from_json(const std::string& text, const ExperimentConfig& defaults) {
  ExperimentConfig c = defaults;
  try {
    apply_experiment_json(parse_config(text), c);
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  return c;
}

std::string experiment_to_json(const ExperimentConfig& config) { return experiment_json(config).dump(2) + "\n"; }

std::vector<ExperimentConfig> experiments_from_config(const std::string& text) {
  const json root = parse_config(text);
  if (!root.is_object()) throw InvalidInput("experiment config: expected a JSON object");
  json shared = root;
  shared.erase("experiments");
  std::vector<json> items;
  if (root.contains("experiments")) {
    for (const auto& item : root.at("experiments")) items.push_back(item);
    if (items.empty()) throw InvalidInput("experiment config: 'experiments' is empty");
  } else {
    items.push_back(json::object());
  }
  std::vector<ExperimentConfig> out;
  try {
    for (const auto& item : items) {
      const json* name = item.contains("theorem") ? &item.at("theorem") : shared.contains("theorem") ? &shared.at("theorem") : nullptr;
      if (name == nullptr) throw InvalidInput("experiment config: every experiment needs a theorem");
      ExperimentConfig c = default_experiment(theorem_from_string(name->get<std::string>()));
      apply_experiment_json(shared, c);
      apply_experiment_json(item, c);
      out.push_back(c);
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("experiment config: ") + e.what());
  }
  return out;
}

std::string coverage_to_json(const std::vector<ExperimentConfig>& configs, const std::vector<CoverageReport>& reports) {
  require_matching(configs, reports);
  ordered_json j;
  bool all = true;
  ordered_json list = ordered_json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    all = all && reports[i].passed;
    list.push_back(ordered_json{{"config", experiment_json(configs[i])}, {"report", report_json(reports[i])}});
  }
  j["all_passed"] = all;
  j["experiments"] = list;
  return j.dump(2) + "\n";
}

std::string replications_to_csv(const CoverageReport& report) {
  std::string out = "rep,seed,lhs,rhs,holds,error\n";
  for (const auto& r : report.per_replication) {
    out += std::to_string(r.rep) + "," + std::to_string(r.seed) + "," + format_number(r.lhs) + "," +
           format_number(r.rhs) + "," + (r.holds ? "1" : "0") + "," + csv_field(r.error) + "\n";
  }
  return out;
}

std::string coverage_summary(const std::vector<ExperimentConfig>& configs, const std::vector<CoverageReport>& reports) {
  require_matching(configs, reports);
  std::ostringstream os;
  os << std::left << std::setw(18) << "check" << std::right << std::setw(6) << "reps" << std::setw(6) << "held"
     << std::setw(8) << "errors" << std::setw(10) << "coverage" << std::setw(9) << "target" << std::setw(11)
     << "threshold" << "  result\n";
  bool all = true;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    all = all && r.passed;
    os << std::left << std::setw(18) << to_string(r.theorem) << std::right << std::setw(6) << r.replications
       << std::setw(6) << r.successes << std::setw(8) << r.errors << std::fixed << std::setprecision(4)
       << std::setw(10) << r.empirical_coverage << std::setw(9) << r.target_coverage << std::setw(11)
       << r.pass_threshold << "  " << (r.passed ? "PASS" : "FAIL") << "\n";
    os.unsetf(std::ios::fixed);
    os << "  " << format_potential_spec(configs[i].spec.potential) << ", trainer " << configs[i].trainer.kind
       << ", n=" << configs[i].spec.n << ", d=" << configs[i].spec.d << ", delta=" << format_number(configs[i].delta)
       << ", seed=" << configs[i].spec.seed << "\n";
  }
  os << (all ? "all checks passed\n" : "some checks FAILED\n");
  return os.str();
}

void write_validation_outputs(const std::string& dir, const std::vector<ExperimentConfig>& configs,
                              const std::vector<CoverageReport>& reports) {
  require_matching(configs, reports);
  const std::filesystem::path root(dir);
  std::filesystem::create_directories(root);
  write_file_or_throw(root / "coverage.json", coverage_to_json(configs, reports));
  std::map<std::string, int> seen;
  for (const auto& r : reports) {
    const std::string name = to_string(r.theorem);
    const int k = seen[name]++;
    const std::string file = "replications_" + name + (k ? "_" + std::to_string(k + 1) : "") + ".csv";
    write_file_or_throw(root / file, replications_to_csv(r));
  }
  write_file_or_throw(root / "summary.txt", coverage_summary(configs, reports));
}

}  // namespace wildrefit
