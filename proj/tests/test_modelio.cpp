#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "filterstab/errors.hpp"
#include "filterstab/modelio.hpp"
#include "oracles.hpp"

using namespace filterstab;
using testutil::TestRng;

namespace {

const std::string kFixtures = FILTERSTAB_FIXTURE_DIR;

bool has_rule(const std::vector<Diagnostic>& diags, const std::string& rule) {
  for (const auto& d : diags) {
    if (d.rule == rule) return true;
  }
  return false;
}

PompModel random_finite_model(TestRng& rng) {
  const std::size_t n = 2 + rng.index(3);
  const std::size_t m = 2 + rng.index(3);
  FinitePomp fp{testutil::random_stochastic(rng, n, n, 0.2),
                testutil::random_stochastic(rng, n, m, 0.2),
                {}};
  if (rng.uniform() < 0.5) {
    fp.actions.emplace("go", testutil::random_stochastic(rng, n, n, 0.2));
    fp.actions.emplace("stay", testutil::random_stochastic(rng, n, n, 0.2));
  }
  return PompModel{"random", 1, std::move(fp)};
}

PompModel random_gaussian_model(TestRng& rng) {
  auto pick = [&](double lo) {
    switch (rng.index(4)) {
      case 0:
        return MeanFunction(AffineClipped{rng.uniform() * 2, rng.uniform(), 0.5 + rng.uniform()});
      case 1:
        return MeanFunction(Sine{0.5 + rng.uniform(), rng.uniform() * 3, rng.uniform()});
      case 2:
        return MeanFunction(TanhScaled{0.5 + rng.uniform(), rng.uniform() * 2});
      default:
        return MeanFunction(
            TableLinear{{-1.0, lo, 2.0}, {rng.uniform(), -rng.uniform(), rng.uniform()}});
    }
  };
  GaussianPomp gp{Gaussian1DKernel(pick(0.0), 0.5 + rng.uniform()),
                  Gaussian1DKernel(pick(0.5), 0.5 + rng.uniform())};
  return PompModel{"random-gaussian", 1, std::move(gp)};
}

}  // namespace

TEST_CASE("fixture models load") {
  for (const char* name : {"three_state_demo", "twostate_stable", "gaussian_tanh",
                           "controlled_demo"}) {
    const auto r = load_model_file(kFixtures + "/models/" + name + ".json");
    REQUIRE_MESSAGE(r.ok(), format_diagnostics(r.diagnostics));
  }
  const auto demo = load_model_file(kFixtures + "/models/three_state_demo.json");
  CHECK(demo.model->name == "three-state-demo");
  CHECK(demo.model->kind() == ModelKind::finite);
  CHECK(demo.model->finite()->t.rows() == 3);
}

TEST_CASE("serialization round-trips byte for byte") {
  TestRng rng(501);
  std::vector<PompModel> battery;
  for (int i = 0; i < 40; ++i) battery.push_back(random_finite_model(rng));
  for (int i = 0; i < 40; ++i) battery.push_back(random_gaussian_model(rng));
  for (const char* name : {"three_state_demo", "twostate_stable", "gaussian_tanh",
                           "controlled_demo"}) {
    battery.push_back(*load_model_file(kFixtures + "/models/" + name + ".json").model);
  }

  for (const auto& m : battery) {
    const std::string text = serialize_model(m);
    const auto back = parse_model(text);
    REQUIRE_MESSAGE(back.ok(), format_diagnostics(back.diagnostics));
    CHECK(serialize_model(*back.model) == text);  // canonical fixed point
    if (const auto* f = m.finite()) {
      const auto* g = back.model->finite();
      REQUIRE(g != nullptr);
      CHECK(f->t == g->t);  // exact double equality
      CHECK(f->q == g->q);
      CHECK(f->actions.size() == g->actions.size());
    } else {
      const auto* g = back.model->gaussian();
      REQUIRE(g != nullptr);
      CHECK(m.gaussian()->transition.sigma() == g->transition.sigma());
      CHECK(m.gaussian()->transition.bound() == g->transition.bound());
      CHECK(m.gaussian()->measurement.sigma() == g->measurement.sigma());
    }
  }
}

TEST_CASE("serialization is canonical") {
  FinitePomp fp{StochasticMatrix::identity(2), StochasticMatrix(2, 2, {0.5, 0.5, 0.5, 0.5}), {}};
  fp.actions.emplace("zeta", StochasticMatrix::identity(2));
  fp.actions.emplace("alpha", StochasticMatrix::identity(2));
  const PompModel m{"demo", 1, std::move(fp)};
  const std::string a = serialize_model(m);
  const std::string b = serialize_model(m);
  CHECK(a == b);
  CHECK(a.find("\"alpha\"") < a.find("\"zeta\""));  // lexicographic action keys
}

TEST_CASE("model validation rules fire with their ids") {
  auto diags = [](const std::string& text) { return parse_model(text).diagnostics; };

  CHECK(has_rule(diags("{nope"), "syntax_error"));
  CHECK(has_rule(diags("[1,2]"), "wrong_type"));
  CHECK(has_rule(diags(R"({"name":"x","kind":"finite","finite":{"T":[[1]],"Q":[[1]]}})"),
                 "missing_field"));  // version absent
  CHECK(has_rule(diags(R"({"version":2,"kind":"finite","finite":{"T":[[1]],"Q":[[1]]}})"),
                 "version_unsupported"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"weird"})"), "kind_invalid"));

  const std::string bad_row = R"({"version":1,"kind":"finite","finite":{
      "T":[[0.5,0.49],[0.5,0.5]],"Q":[[1.0,0.0],[0.0,1.0]]}})";
  const auto d = diags(bad_row);
  REQUIRE(has_rule(d, "row_stochastic_violation"));
  bool mentions_defect = false;
  for (const auto& item : d) {
    if (item.rule == "row_stochastic_violation" &&
        item.message.find("0.01") != std::string::npos &&
        item.message.find("row 0") != std::string::npos) {
      mentions_defect = true;
    }
  }
  CHECK(mentions_defect);

  CHECK(has_rule(diags(R"({"version":1,"kind":"finite","finite":{
      "T":[[1.5,-0.5],[0.5,0.5]],"Q":[[1.0,0.0],[0.0,1.0]]}})"),
                 "negative_entry"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"finite","finite":{
      "T":[[0.5,0.5]],"Q":[[1.0]]}})"),
                 "matrix_shape"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"finite","finite":{
      "T":[[0.5,0.5],[0.5,0.5]],"Q":[[1.0]]}})"),
                 "dimension_mismatch"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"finite","finite":{
      "T":[[0.5,0.5],[0.5,0.5]],"Q":[[1.0,0.0],[0.0,1.0]],
      "actions":{"":[[0.5,0.5],[0.5,0.5]]}}})"),
                 "action_key_empty"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"gaussian1d","gaussian1d":{
      "f":{"family":"tanh","scale":1.0,"gain":1.0},"t":1.0,"sigma_t":0.0,
      "g":{"family":"tanh","scale":1.0,"gain":1.0},"q":1.0,"sigma_q":1.0}})"),
                 "positive_sigma_required"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"gaussian1d","gaussian1d":{
      "f":{"family":"spline"},"t":1.0,"sigma_t":1.0,
      "g":{"family":"tanh","scale":1.0,"gain":1.0},"q":1.0,"sigma_q":1.0}})"),
                 "unknown_mean_fn"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"gaussian1d","gaussian1d":{
      "f":{"family":"tanh","scale":2.0,"gain":1.0},"t":1.0,"sigma_t":1.0,
      "g":{"family":"tanh","scale":1.0,"gain":1.0},"q":1.0,"sigma_q":1.0}})"),
                 "bound_violation"));
  CHECK(has_rule(diags(R"({"version":1,"kind":"finite",
      "finite":{"T":[[1.0]],"Q":[[1.0]]},
      "gaussian1d":{}})"),
                 "kind_section_mismatch"));
}

TEST_CASE("experiment configs load and validate") {
  const auto good = load_experiment_file(kFixtures + "/configs/twostate_stable.json");
  REQUIRE_MESSAGE(good.ok(), format_diagnostics(good.diagnostics));
  CHECK(good.config->spec.trials == 10000);
  CHECK(good.config->spec.horizon == 20);
  CHECK(good.config->spec.seed == 42);
  CHECK(good.config->model_name == "two-state-stable");
  CHECK(std::holds_alternative<FiniteExperiment>(good.config->spec.model));

  const auto grid = load_experiment_file(kFixtures + "/configs/gaussian_tanh.json");
  REQUIRE_MESSAGE(grid.ok(), format_diagnostics(grid.diagnostics));
  const auto& ge = std::get<GridExperiment>(grid.config->spec.model);
  CHECK(ge.grid.cells == 400);
  CHECK(ge.mu.cells() == 400);

  CHECK_THROWS_AS(load_experiment_file(kFixtures + "/configs/nonexistent.json"), IoError);
}

TEST_CASE("experiment config validation rules") {
  const auto model = *load_model_file(kFixtures + "/models/twostate_stable.json").model;
  auto diags = [&](const std::string& text) {
    return parse_experiment(text, model).diagnostics;
  };

  CHECK(has_rule(diags(R"({"version":1,"backend":"finite","mu":[0.5,0.5],"nu":[0.5,0.5],
                           "horizon":0,"trials":10,"seed":1})"),
                 "horizon_invalid"));
  CHECK(has_rule(diags(R"({"version":1,"backend":"finite","mu":[0.5,0.5],"nu":[0.5,0.5],
                           "horizon":5,"trials":0,"seed":1})"),
                 "trials_invalid"));
  CHECK(has_rule(diags(R"({"version":1,"backend":"grid","mu":[0.5,0.5],"nu":[0.5,0.5],
                           "horizon":5,"trials":10,"seed":1})"),
                 "backend_model_mismatch"));
  CHECK(has_rule(diags(R"({"version":1,"backend":"teleport","mu":[0.5,0.5],"nu":[0.5,0.5],
                           "horizon":5,"trials":10,"seed":1})"),
                 "backend_invalid"));
  CHECK(has_rule(diags(R"({"version":1,"backend":"finite","mu":[0.5,0.3,0.2],"nu":[0.5,0.5],
                           "horizon":5,"trials":10,"seed":1})"),
                 "prior_length_mismatch"));
  CHECK(has_rule(diags(R"({"version":1,"backend":"finite","mu":[0.5,0.5],"nu":[0.5,0.5],
                           "horizon":5,"trials":10,"seed":-4})"),
                 "seed_invalid"));

  const auto ac = diags(R"({"version":1,"backend":"finite","mu":[0.5,0.5],"nu":[1.0,0.0],
                            "horizon":5,"trials":10,"seed":1})");
  REQUIRE(has_rule(ac, "absolute_continuity_violation"));
  bool names_index = false;
  for (const auto& d : ac) {
    if (d.message.find("index 1") != std::string::npos) names_index = true;
  }
  CHECK(names_index);

  const auto gm = *load_model_file(kFixtures + "/models/gaussian_tanh.json").model;
  auto gdiags = [&](const std::string& text) {
    return parse_experiment(text, gm).diagnostics;
  };
  CHECK(has_rule(gdiags(R"({"version":1,"backend":"grid","horizon":5,"trials":10,"seed":1,
      "grid":{"lo":2.0,"hi":-2.0,"cells":100},
      "mu":{"family":"gaussian","mean":0,"sigma":1},
      "nu":{"family":"gaussian","mean":0,"sigma":1}})"),
                 "grid_spec_invalid"));
  CHECK(has_rule(gdiags(R"({"version":1,"backend":"grid","horizon":5,"trials":10,"seed":1,
      "grid":{"lo":-2.0,"hi":2.0,"cells":100},
      "mu":{"family":"gaussian","mean":500,"sigma":0.01},
      "nu":{"family":"gaussian","mean":0,"sigma":1}})"),
                 "prior_mass_outside_grid"));
  CHECK(has_rule(gdiags(R"({"version":1,"backend":"grid","horizon":5,"trials":10,"seed":1,
      "grid":{"lo":-2.0,"hi":2.0,"cells":100},
      "mu":{"family":"dirac"},
      "nu":{"family":"gaussian","mean":0,"sigma":1}})"),
                 "prior_family_invalid"));

  // Uniform mu inside a wider gaussian nu is fine; the reverse violates
  // absolute continuity on the cells outside the uniform's support.
  const auto ok = parse_experiment(
      R"({"version":1,"backend":"grid","horizon":5,"trials":10,"seed":1,
      "grid":{"lo":-2.0,"hi":2.0,"cells":100},
      "mu":{"family":"uniform","lo":-1.0,"hi":1.0},
      "nu":{"family":"gaussian","mean":0,"sigma":1}})",
      gm);
  CHECK(ok.ok());
  const auto bad = parse_experiment(
      R"({"version":1,"backend":"grid","horizon":5,"trials":10,"seed":1,
      "grid":{"lo":-2.0,"hi":2.0,"cells":100},
      "mu":{"family":"gaussian","mean":0,"sigma":1},
      "nu":{"family":"uniform","lo":-1.0,"hi":1.0}})",
      gm);
  CHECK(has_rule(bad.diagnostics, "absolute_continuity_violation"));
}

TEST_CASE("save and reload through the filesystem") {
  const auto model = *load_model_file(kFixtures + "/models/gaussian_tanh.json").model;
  const auto dir = std::filesystem::temp_directory_path() / "filterstab_modelio_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "roundtrip.json").string();
  save_model_file(path, model);
  const auto back = load_model_file(path);
  REQUIRE(back.ok());
  CHECK(serialize_model(*back.model) == serialize_model(model));
  std::filesystem::remove_all(dir);

  CHECK_THROWS_AS(load_model_file("/nonexistent/path/model.json"), IoError);
  CHECK_THROWS_AS(save_model_file("/nonexistent/dir/out.json", model), IoError);
}
