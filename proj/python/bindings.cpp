#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>

#include "wildrefit/certify.hpp"
#include "wildrefit/complexity.hpp"
#include "wildrefit/harness.hpp"
#include "wildrefit/io.hpp"
#include "wildrefit/wildfit.hpp"

namespace py = pybind11;
using namespace wildrefit;

namespace {

BregmanLoss make_loss(const std::string& potential, int dim) {
  return BregmanLoss(builtin_potential(parse_potential_spec(potential), dim));
}

// Inputs may be an n x 0 array; numpy hands those over fine, but None is friendlier.
Matrix inputs_or_empty(const std::optional<Matrix>& inputs, Eigen::Index n) {
  return inputs ? *inputs : Matrix(n, 0);
}

py::dict refit_dict(const BregmanLoss& loss, const WildRefitResult& r) {
  py::dict out;
  out["fhat"] = r.fhat.values;
  out["fdiamond"] = r.fdiamond.values;
  out["wild_responses"] = r.wild_responses;
  out["residues"] = r.residues;
  out["signs"] = r.signs.values;
  out["sign_seed"] = r.signs.seed;
  out["rho"] = r.rho;
  out["clipped_rows"] = r.clipped_rows;
  out["wild_optimism"] = wild_optimism(loss, r);
  out["wild_radius"] = wild_radius(loss, r);
  return out;
}

py::dict report_dict(const CoverageReport& r) {
  py::list reps;
  for (const auto& x : r.per_replication) {
    py::dict d;
    d["rep"] = x.rep;
    d["seed"] = x.seed;
    d["lhs"] = x.lhs;
    d["rhs"] = x.rhs;
    d["holds"] = x.holds;
    d["error"] = x.error;
    reps.append(d);
  }
  py::dict out;
  out["theorem"] = to_string(r.theorem);
  out["replications"] = r.replications;
  out["successes"] = r.successes;
  out["errors"] = r.errors;
  out["empirical_coverage"] = r.empirical_coverage;
  out["target_coverage"] = r.target_coverage;
  out["pass_threshold"] = r.pass_threshold;
  out["passed"] = r.passed;
  out["per_replication"] = reps;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Wild refitting under Bregman losses";

  m.def(
      "divergence",
      [](const Vector& x, const Vector& y, const std::string& potential) {
        return divergence(make_loss(potential, static_cast<int>(x.size())), x, y);
      },
      py::arg("x"), py::arg("y"), py::arg("potential") = "squared_l2");

  m.def(
      "potential_constants",
      [](const std::string& potential, int dim) {
        auto loss = make_loss(potential, dim);
        return py::dict(py::arg("alpha") = loss.alpha(), py::arg("beta") = loss.beta(), py::arg("c0") = loss.c0());
      },
      py::arg("potential"), py::arg("dim"));

  m.def(
      "simulate",
      [](Eigen::Index n, Eigen::Index d, Eigen::Index p, std::uint64_t seed, const std::string& potential,
         const std::string& design, const std::string& fstar, const std::string& noise, double amplitude) {
        SyntheticSpec spec;
        spec.n = n;
        spec.d = d;
        spec.p = p;
        spec.seed = seed;
        spec.potential = parse_potential_spec(potential);
        spec.design = design_kind_from_string(design);
        spec.fstar.family = fstar_family_from_string(fstar);
        spec.noise.family = noise_family_from_string(noise);
        spec.noise.amplitude = amplitude;
        auto [data, oracle] = generate_synthetic(spec);
        py::dict out;
        out["inputs"] = data.inputs();
        out["responses"] = data.responses();
        out["fstar"] = oracle.fstar_preds.values;
        out["noise"] = oracle.noise;
        out["w_inf"] = oracle.w_inf;
        return out;
      },
      py::arg("n") = 200, py::arg("d") = 2, py::arg("p") = 2, py::arg("seed") = 0,
      py::arg("potential") = "squared_l2", py::arg("design") = "fixed", py::arg("fstar") = "linear",
      py::arg("noise") = "uniform", py::arg("amplitude") = 0.5);

  m.def(
      "wild_refit",
      [](const Matrix& responses, double rho, std::uint64_t seed, const std::optional<Matrix>& inputs,
         const std::string& potential, const std::string& set, const std::string& trainer) {
        auto loss = make_loss(potential, static_cast<int>(responses.cols()));
        auto cset = parse_compact_set(set, loss.potential());
        TrainerSpec ts;
        ts.kind = trainer;
        auto t = make_trainer(ts, loss, cset);
        FixedDesignDataset data(inputs_or_empty(inputs, responses.rows()), responses);
        return refit_dict(loss, wild_refit(*t, data, rho, seed));
      },
      py::arg("responses"), py::arg("rho"), py::arg("seed") = 0, py::arg("inputs") = py::none(),
      py::arg("potential") = "squared_l2", py::arg("set") = "default", py::arg("trainer") = "saturated");

  m.def(
      "calibrate_rho",
      [](const Matrix& responses, double target_radius, std::uint64_t seed, const std::optional<Matrix>& inputs,
         const std::string& potential, const std::string& set, const std::string& trainer, double tol_rel) {
        auto loss = make_loss(potential, static_cast<int>(responses.cols()));
        auto cset = parse_compact_set(set, loss.potential());
        TrainerSpec ts;
        ts.kind = trainer;
        auto t = make_trainer(ts, loss, cset);
        FixedDesignDataset data(inputs_or_empty(inputs, responses.rows()), responses);
        CalibrationOptions opts;
        opts.seed = seed;
        opts.tol_rel = tol_rel;
        auto cal = calibrate_rho(*t, data, target_radius, opts);
        py::dict out = refit_dict(loss, cal.result);
        out["achieved_radius"] = cal.achieved_radius;
        out["used_grid_fallback"] = cal.used_grid_fallback;
        return out;
      },
      py::arg("responses"), py::arg("target_radius"), py::arg("seed") = 0, py::arg("inputs") = py::none(),
      py::arg("potential") = "squared_l2", py::arg("set") = "default", py::arg("trainer") = "saturated",
      py::arg("tol_rel") = 1e-3);

  m.def(
      "wn",
      [](const Matrix& center, const Matrix& z, double r, const std::string& potential, const std::string& set) {
        auto loss = make_loss(potential, static_cast<int>(center.cols()));
        auto sol = wn_solve(loss, parse_compact_set(set, loss.potential()), center, z, r);
        return py::dict(py::arg("value") = sol.value, py::arg("upper_bound") = sol.upper_bound,
                        py::arg("certified") = sol.certified, py::arg("argmax") = sol.argmax);
      },
      py::arg("center"), py::arg("z"), py::arg("r"), py::arg("potential") = "squared_l2",
      py::arg("set") = "default");

  m.def(
      "fixed_point_radius",
      [](const Matrix& center, const Matrix& z, double delta, const std::string& potential, const std::string& set,
         std::optional<double> r_max) {
        auto loss = make_loss(potential, static_cast<int>(center.cols()));
        auto cset = parse_compact_set(set, loss.potential());
        RadiusSearchOptions opts;
        opts.r_max = r_max ? *r_max : radius_scale(loss, cset);
        return fixed_point_radius(make_wn_evaluator(loss, cset, PredictionMatrix{center}, z), delta, center.rows(),
                                  opts);
      },
      py::arg("center"), py::arg("z"), py::arg("delta") = 1.2340980408667956e-4, py::arg("potential") = "squared_l2",
      py::arg("set") = "default", py::arg("r_max") = py::none());

  m.def(
      "deviation_term",
      [](double misspec, double r, double w_inf, Eigen::Index n, Eigen::Index d, double delta,
         const std::string& potential) {
        return deviation_term(make_loss(potential, static_cast<int>(d)), misspec, r, w_inf, n, d, delta);
      },
      py::arg("misspec"), py::arg("r"), py::arg("w_inf"), py::arg("n"), py::arg("d"), py::arg("delta"),
      py::arg("potential") = "squared_l2");

  m.def(
      "random_design_addend",
      [](double M, double L, double alpha, Eigen::Index n, double delta) {
        return random_design_addend(StabilityConstants{M, L, alpha, 0.0}, n, delta);
      },
      py::arg("M"), py::arg("L"), py::arg("alpha"), py::arg("n"), py::arg("delta"));

  m.def(
      "default_experiment",
      [](const std::string& theorem) { return experiment_to_json(default_experiment(theorem_from_string(theorem))); },
      py::arg("theorem"), "Default configuration of a check, as JSON text.");

  m.def(
      "run_coverage",
      [](const std::string& theorem, std::optional<int> reps, std::optional<std::uint64_t> seed,
         const std::string& overrides_json) {
        ExperimentConfig cfg =
            experiment_from_json(overrides_json, default_experiment(theorem_from_string(theorem)));
        if (reps) cfg.reps = *reps;
        if (seed) cfg.spec.seed = *seed;
        CoverageReport rep;
        {
          py::gil_scoped_release release;
          rep = run_coverage(cfg);
        }
        return report_dict(rep);
      },
      py::arg("theorem"), py::arg("reps") = py::none(), py::arg("seed") = py::none(),
      py::arg("overrides_json") = "{}");
}
