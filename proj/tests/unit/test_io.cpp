#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "support.hpp"
#include "wildrefit/errors.hpp"
#include "wildrefit/io.hpp"

using namespace wildrefit;

TEST_CASE("numbers round trip") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 123456789.125}) CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("dataset csv round trip and header") {
  SyntheticSpec spec;
  spec.n = 25;
  spec.p = 3;
  spec.seed = 4;
  auto [data, oracle] = generate_synthetic(spec);
  const std::string csv = dataset_to_csv(data);
  CHECK(csv.rfind("x_1,x_2,x_3,y_1,y_2\n", 0) == 0);
  auto back = dataset_from_csv(csv);
  CHECK(back.inputs() == data.inputs());
  CHECK(back.responses() == data.responses());

  auto path = std::filesystem::temp_directory_path() / "wildrefit_io_test.csv";
  save_dataset_csv(path.string(), data);
  CHECK(load_dataset_csv(path.string()).responses() == data.responses());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(dataset_from_csv("a,b\n1,2\n"), InvalidInput);
  CHECK_THROWS_AS(dataset_from_csv("x_1,y_1\n1\n"), InvalidInput);
  CHECK_THROWS_AS(dataset_from_csv("x_1,y_1\n1,abc\n"), InvalidInput);
  auto opaque = dataset_from_csv("y_1\n0.5\n0.25\n");
  CHECK(opaque.p() == 0);
  CHECK(opaque.n() == 2);
}

TEST_CASE("potential and set descriptors") {
  auto s = parse_potential_spec("sqrt_bernoulli:eps0=0.2");
  CHECK(s.kind == PotentialKind::sqrt_bernoulli);
  CHECK(s.eps0 == 0.2);
  CHECK(parse_potential_spec(format_potential_spec(s)).eps0 == 0.2);
  CHECK(parse_potential_spec("clipped_simplex_kl:eta0=0.05").eta0 == 0.05);
  CHECK_THROWS_AS(parse_potential_spec("squared_l2:eps0"), InvalidInput);

  auto pot = Potential::squared_l2(2);
  auto box = parse_compact_set("box:-1:2", pot);
  Vector z(2);
  z << 5.0, -5.0;
  CHECK(box.project(z)(0) == 2.0);
  CHECK(box.project(z)(1) == -1.0);
  CHECK(describe_compact_set(parse_compact_set(describe_compact_set(box), pot)) == describe_compact_set(box));
  CHECK(parse_compact_set("default:3", pot).project(z)(0) == 3.0);
  auto kl = Potential::clipped_simplex_kl(3, 0.05);
  CHECK(describe_compact_set(parse_compact_set("simplex:0.1", kl)) == "simplex:0.1");
  CHECK_THROWS_AS(parse_compact_set("ball:1", pot), InvalidInput);
}

TEST_CASE("refit json round trip") {
  SyntheticSpec spec;
  spec.n = 30;
  spec.seed = 2;
  auto [data, oracle] = generate_synthetic(spec);
  BregmanLoss loss(Potential::squared_l2(2));
  LinearTrainer trainer(loss, CompactSet::box(2, -10.0, 10.0));
  auto res = wild_refit(trainer, data, 0.7, 12);
  RefitContext ctx;
  ctx.trainer.kind = "linear";
  const std::string text = refit_to_json(res, ctx);
  RefitContext back_ctx;
  auto back = refit_from_json(text, &back_ctx);
  CHECK(back.fhat == res.fhat);
  CHECK(back.fdiamond == res.fdiamond);
  CHECK(back.wild_responses == res.wild_responses);
  CHECK(back.residues == res.residues);
  CHECK(back.responses == res.responses);
  CHECK(back.signs.values == res.signs.values);
  CHECK(back.signs.seed == 12);
  CHECK(back.rho == 0.7);
  CHECK(back_ctx.trainer.kind == "linear");
  CHECK(text.find("\"wild_optimism\"") != std::string::npos);
  CHECK_THROWS_AS(refit_from_json("{}"), InvalidInput);
}

TEST_CASE("radius report round trip") {
  RadiusReport r{0.12, 0.34, 0.56, RadiusMethod::convex_class_bound};
  auto back = radius_report_from_json(radius_report_to_json(r, R"({"note":"x"})"));
  CHECK(back.r_hat_n == 0.12);
  CHECK(back.r_diamond_rho == 0.34);
  CHECK(back.r_certified == 0.56);
  CHECK(back.method == RadiusMethod::convex_class_bound);
}

TEST_CASE("experiment configs") {
  auto c = experiment_from_json(R"({"theorem":"thm_6_1_rhat","reps":123,"n":50,"trainer":{"kind":"linear"}})");
  CHECK(c.theorem == TheoremCheck::thm_6_1_rhat);
  CHECK(c.reps == 123);
  CHECK(c.spec.n == 50);
  CHECK(c.trainer.kind == "linear");
  auto back = experiment_from_json(experiment_to_json(c));
  CHECK(experiment_to_json(back) == experiment_to_json(c));

  auto list = experiments_from_config(
      R"({"seed":7,"experiments":[{"theorem":"lemma_5_1"},{"theorem":"thm_5_1_excess","seed":9}]})");
  REQUIRE(list.size() == 2);
  CHECK(list[0].spec.seed == 7);
  CHECK(list[0].reps == default_experiment(TheoremCheck::lemma_5_1).reps);
  CHECK(list[1].spec.seed == 9);
  CHECK(list[1].trainer.kind == default_experiment(TheoremCheck::thm_5_1_excess).trainer.kind);
  CHECK_THROWS_AS(experiments_from_config("{\"experiments\":[{}]}"), InvalidInput);
  CHECK_THROWS_AS(experiments_from_config("not json"), InvalidInput);
}

TEST_CASE("validation outputs") {
  auto cfg = default_experiment(TheoremCheck::lemma_5_1);
  cfg.reps = 5;
  auto rep = run_coverage(cfg);
  const std::string csv = replications_to_csv(rep);
  CHECK(csv.rfind("rep,seed,lhs,rhs,holds,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  const std::string summary = coverage_summary({cfg}, {rep});
  CHECK(summary.find("lemma_5_1") != std::string::npos);
  CHECK(summary.find("all checks passed") != std::string::npos);

  auto dir = std::filesystem::temp_directory_path() / "wildrefit_io_validation";
  std::filesystem::remove_all(dir);
  write_validation_outputs(dir.string(), {cfg, cfg}, {rep, rep});
  CHECK(std::filesystem::exists(dir / "coverage.json"));
  CHECK(std::filesystem::exists(dir / "summary.txt"));
  CHECK(std::filesystem::exists(dir / "replications_lemma_5_1.csv"));
  CHECK(std::filesystem::exists(dir / "replications_lemma_5_1_2.csv"));
  CHECK(read_text_file((dir / "replications_lemma_5_1.csv").string()) == csv);
  std::filesystem::remove_all(dir);
}
