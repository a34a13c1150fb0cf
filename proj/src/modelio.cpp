#include "filterstab/modelio.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "filterstab/errors.hpp"
#include "filterstab/math_util.hpp"

namespace filterstab {
namespace {

using nlohmann::json;

struct Ctx {
  std::vector<Diagnostic>* diags;

  void add(std::string path, std::string rule, std::string message) const {
    diags->push_back({std::move(path), std::move(rule), std::move(message)});
  }
  bool clean() const { return diags->empty(); }
};

const json* want(const Ctx& ctx, const json& j, const std::string& base,
                 const char* field) {
  if (!j.contains(field)) {
    ctx.add(base + "/" + field, "missing_field", std::string("required field \"") + field +
                                                     "\" is missing");
    return nullptr;
  }
  return &j.at(field);
}

std::optional<double> want_number(const Ctx& ctx, const json& j, const std::string& path) {
  if (!j.is_number()) {
    ctx.add(path, "wrong_type", "expected a number");
    return std::nullopt;
  }
  return j.get<double>();
}

std::optional<std::string> want_string(const Ctx& ctx, const json& j, const std::string& path) {
  if (!j.is_string()) {
    ctx.add(path, "wrong_type", "expected a string");
    return std::nullopt;
  }
  return j.get<std::string>();
}

// Matrix = array of equally long rows of nonnegative numbers, each row
// summing to 1 within the finite-mass tolerance.
std::optional<StochasticMatrix> parse_matrix(const Ctx& ctx, const json& j,
                                             const std::string& path) {
  if (!j.is_array() || j.empty()) {
    ctx.add(path, "matrix_shape", "expected a non-empty array of rows");
    return std::nullopt;
  }
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> entries;
  bool ok = true;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    const std::string row_path = path + "/" + std::to_string(i);
    if (!row.is_array() || row.empty()) {
      ctx.add(row_path, "matrix_shape", "expected a non-empty row of numbers");
      return std::nullopt;
    }
    if (i == 0) {
      cols = row.size();
    } else if (row.size() != cols) {
      ctx.add(row_path, "matrix_shape", "rows have inconsistent lengths");
      return std::nullopt;
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto v = want_number(ctx, row[c], row_path + "/" + std::to_string(c));
      if (!v) return std::nullopt;
      if (!(*v >= 0.0)) {
        ctx.add(row_path + "/" + std::to_string(c), "negative_entry",
                "kernel entries must be nonnegative");
        ok = false;
        continue;
      }
      sum += *v;
      entries.push_back(*v);
    }
    if (ok && std::fabs(sum - 1.0) > kFiniteMassTol) {
      std::ostringstream os;
      os << "row " << i << " sums to " << sum << " (defect " << std::fabs(sum - 1.0) << ")";
      ctx.add(row_path, "row_stochastic_violation", os.str());
      ok = false;
    }
  }
  if (!ok) return std::nullopt;
  return StochasticMatrix(rows, cols, std::move(entries));
}

std::optional<MeanFunction> parse_mean_fn(const Ctx& ctx, const json& j,
                                          const std::string& path) {
  if (!j.is_object()) {
    ctx.add(path, "wrong_type", "expected a mean-function object");
    return std::nullopt;
  }
  const json* fam = want(ctx, j, path, "family");
  if (!fam) return std::nullopt;
  const auto family = want_string(ctx, *fam, path + "/family");
  if (!family) return std::nullopt;

  auto num_field = [&](const char* name) -> std::optional<double> {
    const json* f = want(ctx, j, path, name);
    if (!f) return std::nullopt;
    return want_number(ctx, *f, path + "/" + name);
  };

  try {
    if (*family == "affine") {
      const auto a = num_field("a"), b = num_field("b"), clip = num_field("clip");
      if (!a || !b || !clip) return std::nullopt;
      return MeanFunction(AffineClipped{*a, *b, *clip});
    }
    if (*family == "sine") {
      const auto amp = num_field("amplitude"), freq = num_field("frequency"),
                 phase = num_field("phase");
      if (!amp || !freq || !phase) return std::nullopt;
      return MeanFunction(Sine{*amp, *freq, *phase});
    }
    if (*family == "tanh") {
      const auto scale = num_field("scale"), gain = num_field("gain");
      if (!scale || !gain) return std::nullopt;
      return MeanFunction(TanhScaled{*scale, *gain});
    }
    if (*family == "table") {
      const json* xs = want(ctx, j, path, "x");
      const json* ys = want(ctx, j, path, "y");
      if (!xs || !ys) return std::nullopt;
      if (!xs->is_array() || !ys->is_array()) {
        ctx.add(path, "mean_fn_param", "table knots must be arrays");
        return std::nullopt;
      }
      TableLinear t;
      for (const auto& v : *xs) t.x.push_back(v.get<double>());
      for (const auto& v : *ys) t.y.push_back(v.get<double>());
      return MeanFunction(std::move(t));
    }
  } catch (const ContractViolation& e) {
    ctx.add(path, "mean_fn_param", e.what());
    return std::nullopt;
  } catch (const json::exception&) {
    ctx.add(path, "mean_fn_param", "table knots must be numbers");
    return std::nullopt;
  }
  ctx.add(path + "/family", "unknown_mean_fn",
          "family must be one of affine, sine, tanh, table");
  return std::nullopt;
}

std::optional<Gaussian1DKernel> parse_gaussian_kernel(const Ctx& ctx, const json& j,
                                                      const std::string& base,
                                                      const char* fn_field,
                                                      const char* bound_field,
                                                      const char* sigma_field) {
  const json* fn_j = want(ctx, j, base, fn_field);
  const json* bound_j = want(ctx, j, base, bound_field);
  const json* sigma_j = want(ctx, j, base, sigma_field);
  if (!fn_j || !bound_j || !sigma_j) return std::nullopt;

  auto fn = parse_mean_fn(ctx, *fn_j, base + "/" + fn_field);
  const auto bound = want_number(ctx, *bound_j, base + "/" + bound_field);
  const auto sigma = want_number(ctx, *sigma_j, base + "/" + sigma_field);
  if (!fn || !bound || !sigma) return std::nullopt;

  if (!(*sigma > 0.0)) {
    ctx.add(base + "/" + sigma_field, "positive_sigma_required",
            "noise standard deviation must be strictly positive");
    return std::nullopt;
  }
  if (!(*bound >= fn->sup_bound() - 1e-12)) {
    std::ostringstream os;
    os << "declared bound " << *bound << " is below the mean function's sup norm "
       << fn->sup_bound();
    ctx.add(base + "/" + bound_field, "bound_violation", os.str());
    return std::nullopt;
  }
  return Gaussian1DKernel(std::move(*fn), *sigma, *bound);
}

json mean_fn_to_json(const MeanFunction& fn) {
  json j;
  if (const auto* a = std::get_if<AffineClipped>(&fn.spec())) {
    j["family"] = "affine";
    j["a"] = a->a;
    j["b"] = a->b;
    j["clip"] = a->clip;
  } else if (const auto* s = std::get_if<Sine>(&fn.spec())) {
    j["family"] = "sine";
    j["amplitude"] = s->amplitude;
    j["frequency"] = s->frequency;
    j["phase"] = s->phase;
  } else if (const auto* t = std::get_if<TanhScaled>(&fn.spec())) {
    j["family"] = "tanh";
    j["scale"] = t->scale;
    j["gain"] = t->gain;
  } else {
    const auto& tab = std::get<TableLinear>(fn.spec());
    j["family"] = "table";
    j["x"] = tab.x;
    j["y"] = tab.y;
  }
  return j;
}

json matrix_to_json(const StochasticMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path);
  return os.str();
}

}  // namespace

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
  std::ostringstream os;
  for (const auto& d : diags) {
    os << d.rule << " at " << (d.path.empty() ? "/" : d.path) << ": " << d.message << "\n";
  }
  return os.str();
}

ModelParseResult parse_model(std::string_view text) {
  ModelParseResult result;
  Ctx ctx{&result.diagnostics};

  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    ctx.add("", "syntax_error", "document is not valid JSON");
    return result;
  }
  if (!doc.is_object()) {
    ctx.add("", "wrong_type", "top level must be an object");
    return result;
  }

  const json* version = want(ctx, doc, "", "version");
  if (version && (!version->is_number_integer() || version->get<int>() != 1)) {
    ctx.add("/version", "version_unsupported", "only format version 1 is supported");
  }
  std::string name;
  if (doc.contains("name")) {
    if (const auto n = want_string(ctx, doc.at("name"), "/name")) name = *n;
  }
  const json* kind_j = want(ctx, doc, "", "kind");
  if (!ctx.clean() || !kind_j) return result;
  const auto kind = want_string(ctx, *kind_j, "/kind");
  if (!kind) return result;

  if (*kind == "finite") {
    if (doc.contains("gaussian1d")) {
      ctx.add("/gaussian1d", "kind_section_mismatch",
              "finite models must not carry a gaussian1d section");
    }
    const json* fin = want(ctx, doc, "", "finite");
    if (!fin || !ctx.clean()) return result;
    const json* t_j = want(ctx, *fin, "/finite", "T");
    const json* q_j = want(ctx, *fin, "/finite", "Q");
    if (!t_j || !q_j) return result;
    auto t = parse_matrix(ctx, *t_j, "/finite/T");
    auto q = parse_matrix(ctx, *q_j, "/finite/Q");
    if (!t || !q) return result;
    if (t->rows() != t->cols()) {
      ctx.add("/finite/T", "matrix_shape", "transition kernel must be square");
    }
    if (q->rows() != t->rows()) {
      std::ostringstream os;
      os << "Q has " << q->rows() << " rows but the state space has " << t->rows();
      ctx.add("/finite/Q", "dimension_mismatch", os.str());
    }
    ActionKernels actions;
    if (fin->contains("actions")) {
      const json& a = fin->at("actions");
      if (!a.is_object()) {
        ctx.add("/finite/actions", "wrong_type", "actions must map names to matrices");
      } else {
        for (const auto& [key, value] : a.items()) {
          if (key.empty()) {
            ctx.add("/finite/actions", "action_key_empty", "action names must be nonempty");
            continue;
          }
          auto ak = parse_matrix(ctx, value, "/finite/actions/" + key);
          if (!ak) continue;
          if (ak->rows() != t->rows() || ak->cols() != t->cols()) {
            ctx.add("/finite/actions/" + key, "dimension_mismatch",
                    "action kernel shape differs from T");
            continue;
          }
          actions.emplace(key, std::move(*ak));
        }
      }
    }
    if (!ctx.clean()) return result;
    result.model =
        PompModel{name, 1, FinitePomp{std::move(*t), std::move(*q), std::move(actions)}};
    return result;
  }

  if (*kind == "gaussian1d") {
    if (doc.contains("finite")) {
      ctx.add("/finite", "kind_section_mismatch",
              "gaussian1d models must not carry a finite section");
    }
    const json* g = want(ctx, doc, "", "gaussian1d");
    if (!g || !ctx.clean()) return result;
    auto trans = parse_gaussian_kernel(ctx, *g, "/gaussian1d", "f", "t", "sigma_t");
    auto meas = parse_gaussian_kernel(ctx, *g, "/gaussian1d", "g", "q", "sigma_q");
    if (!trans || !meas || !ctx.clean()) return result;
    result.model = PompModel{name, 1, GaussianPomp{std::move(*trans), std::move(*meas)}};
    return result;
  }

  ctx.add("/kind", "kind_invalid", "kind must be \"finite\" or \"gaussian1d\"");
  return result;
}

std::string serialize_model(const PompModel& m) {
  json doc;
  doc["version"] = m.version;
  doc["name"] = m.name;
  if (const FinitePomp* f = m.finite()) {
    doc["kind"] = "finite";
    json fin;
    fin["T"] = matrix_to_json(f->t);
    fin["Q"] = matrix_to_json(f->q);
    if (!f->actions.empty()) {
      json actions;
      for (const auto& [key, kernel] : f->actions) actions[key] = matrix_to_json(kernel);
      fin["actions"] = std::move(actions);
    }
    doc["finite"] = std::move(fin);
  } else {
    const GaussianPomp* g = m.gaussian();
    doc["kind"] = "gaussian1d";
    json sec;
    sec["f"] = mean_fn_to_json(g->transition.mean_fn());
    sec["t"] = g->transition.bound();
    sec["sigma_t"] = g->transition.sigma();
    sec["g"] = mean_fn_to_json(g->measurement.mean_fn());
    sec["q"] = g->measurement.bound();
    sec["sigma_q"] = g->measurement.sigma();
    doc["gaussian1d"] = std::move(sec);
  }
  return doc.dump(2) + "\n";
}

ModelParseResult load_model_file(const std::string& path) {
  return parse_model(read_file(path));
}

void save_model_file(const std::string& path, const PompModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << serialize_model(m);
  if (!out) throw IoError("write failure: " + path);
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

namespace {

std::optional<FiniteDistribution> parse_finite_prior(const Ctx& ctx, const json& j,
                                                     const std::string& path,
                                                     std::size_t states) {
  if (!j.is_array()) {
    ctx.add(path, "wrong_type", "finite-backend priors are arrays of probabilities");
    return std::nullopt;
  }
  if (j.size() != states) {
    std::ostringstream os;
    os << "prior has " << j.size() << " entries but the model has " << states << " states";
    ctx.add(path, "prior_length_mismatch", os.str());
    return std::nullopt;
  }
  std::vector<double> v;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto x = want_number(ctx, j[i], path + "/" + std::to_string(i));
    if (!x) return std::nullopt;
    v.push_back(*x);
  }
  try {
    return FiniteDistribution(std::move(v));
  } catch (const ContractViolation& e) {
    ctx.add(path, "prior_invalid", e.what());
    return std::nullopt;
  }
}

std::optional<GridDensity> parse_grid_prior(const Ctx& ctx, const json& j,
                                            const std::string& path, const GridSpec& grid) {
  const double h = grid.cell_width();
  if (j.is_object() && j.contains("family")) {
    const auto family = want_string(ctx, j.at("family"), path + "/family");
    if (!family) return std::nullopt;
    std::vector<double> v(grid.cells, 0.0);
    if (*family == "gaussian") {
      const json* mean_j = want(ctx, j, path, "mean");
      const json* sigma_j = want(ctx, j, path, "sigma");
      if (!mean_j || !sigma_j) return std::nullopt;
      const auto mean = want_number(ctx, *mean_j, path + "/mean");
      const auto sigma = want_number(ctx, *sigma_j, path + "/sigma");
      if (!mean || !sigma) return std::nullopt;
      if (!(*sigma > 0.0)) {
        ctx.add(path + "/sigma", "positive_sigma_required", "prior sigma must be positive");
        return std::nullopt;
      }
      for (std::size_t i = 0; i < grid.cells; ++i) {
        v[i] = normal_pdf(grid.cell_center(i), *mean, *sigma);
      }
    } else if (*family == "uniform") {
      double lo = grid.lo;
      double hi = grid.hi;
      if (j.contains("lo")) {
        const auto x = want_number(ctx, j.at("lo"), path + "/lo");
        if (!x) return std::nullopt;
        lo = *x;
      }
      if (j.contains("hi")) {
        const auto x = want_number(ctx, j.at("hi"), path + "/hi");
        if (!x) return std::nullopt;
        hi = *x;
      }
      if (!(lo < hi)) {
        ctx.add(path, "prior_family_invalid", "uniform prior needs lo < hi");
        return std::nullopt;
      }
      for (std::size_t i = 0; i < grid.cells; ++i) {
        const double c = grid.cell_center(i);
        if (c >= lo && c <= hi) v[i] = 1.0;
      }
    } else if (*family == "values") {
      const json* values = want(ctx, j, path, "values");
      if (!values) return std::nullopt;
      if (!values->is_array() || values->size() != grid.cells) {
        ctx.add(path + "/values", "prior_length_mismatch",
                "values must have exactly one entry per grid cell");
        return std::nullopt;
      }
      for (std::size_t i = 0; i < grid.cells; ++i) {
        const auto x = want_number(ctx, (*values)[i], path + "/values/" + std::to_string(i));
        if (!x) return std::nullopt;
        v[i] = *x;
      }
      try {
        return GridDensity(grid.lo, grid.hi, std::move(v));
      } catch (const ContractViolation& e) {
        ctx.add(path, "prior_invalid", e.what());
        return std::nullopt;
      }
    } else {
      ctx.add(path + "/family", "prior_family_invalid",
              "family must be one of gaussian, uniform, values");
      return std::nullopt;
    }
    // Normalize the sampled family on the grid.
    double mass = 0.0;
    for (double x : v) mass += x;
    mass *= h;
    if (!(mass > 1e-6)) {
      ctx.add(path, "prior_mass_outside_grid",
              "prior places (numerically) no mass inside the grid");
      return std::nullopt;
    }
    for (double& x : v) x /= mass;
    return GridDensity(grid.lo, grid.hi, std::move(v));
  }
  ctx.add(path, "wrong_type", "grid-backend priors are objects with a \"family\" field");
  return std::nullopt;
}

std::optional<std::size_t> want_count(const Ctx& ctx, const json& doc, const char* field,
                                      const char* rule) {
  const json* j = want(ctx, doc, "", field);
  if (!j) return std::nullopt;
  if (!j->is_number_integer() || j->get<long long>() < 1) {
    ctx.add(std::string("/") + field, rule, "must be an integer >= 1");
    return std::nullopt;
  }
  return static_cast<std::size_t>(j->get<long long>());
}

}  // namespace

ConfigParseResult parse_experiment(std::string_view config_text, const PompModel& model) {
  ConfigParseResult result;
  Ctx ctx{&result.diagnostics};

  const json doc = json::parse(config_text, nullptr, false);
  if (doc.is_discarded()) {
    ctx.add("", "syntax_error", "document is not valid JSON");
    return result;
  }
  if (!doc.is_object()) {
    ctx.add("", "wrong_type", "top level must be an object");
    return result;
  }
  const json* version = want(ctx, doc, "", "version");
  if (version && (!version->is_number_integer() || version->get<int>() != 1)) {
    ctx.add("/version", "version_unsupported", "only format version 1 is supported");
  }

  const json* backend_j = want(ctx, doc, "", "backend");
  const auto horizon = want_count(ctx, doc, "horizon", "horizon_invalid");
  const auto trials = want_count(ctx, doc, "trials", "trials_invalid");
  std::uint64_t seed = 0;
  if (const json* seed_j = want(ctx, doc, "", "seed")) {
    if (!seed_j->is_number_integer() || seed_j->get<long long>() < 0) {
      ctx.add("/seed", "seed_invalid", "seed must be a nonnegative integer");
    } else {
      seed = static_cast<std::uint64_t>(seed_j->get<long long>());
    }
  }
  if (!backend_j || !horizon || !trials || !ctx.clean()) return result;
  const auto backend = want_string(ctx, *backend_j, "/backend");
  if (!backend) return result;

  const json* mu_j = want(ctx, doc, "", "mu");
  const json* nu_j = want(ctx, doc, "", "nu");
  if (!mu_j || !nu_j) return result;

  if (*backend == "finite") {
    const FinitePomp* fin = model.finite();
    if (fin == nullptr) {
      ctx.add("/backend", "backend_model_mismatch",
              "finite backend requires a finite-kind model");
      return result;
    }
    auto mu = parse_finite_prior(ctx, *mu_j, "/mu", fin->t.rows());
    auto nu = parse_finite_prior(ctx, *nu_j, "/nu", fin->t.rows());
    if (!mu || !nu) return result;
    for (std::size_t i = 0; i < mu->size(); ++i) {
      if ((*nu)[i] == 0.0 && (*mu)[i] != 0.0) {
        std::ostringstream os;
        os << "mu places mass at support index " << i << " where nu has none";
        ctx.add("/mu/" + std::to_string(i), "absolute_continuity_violation", os.str());
        return result;
      }
    }
    ExperimentSpec spec{FiniteExperiment{fin->t, fin->q, std::move(*mu), std::move(*nu)},
                        *horizon, *trials, seed};
    result.config = ExperimentConfig{std::move(spec), model.name, ""};
    return result;
  }

  if (*backend == "grid") {
    const GaussianPomp* g = model.gaussian();
    if (g == nullptr) {
      ctx.add("/backend", "backend_model_mismatch",
              "grid backend requires a gaussian1d-kind model");
      return result;
    }
    const json* grid_j = want(ctx, doc, "", "grid");
    if (!grid_j) return result;
    if (!grid_j->is_object()) {
      ctx.add("/grid", "grid_spec_invalid", "grid must be an object {lo, hi, cells}");
      return result;
    }
    const json* lo_j = want(ctx, *grid_j, "/grid", "lo");
    const json* hi_j = want(ctx, *grid_j, "/grid", "hi");
    const json* cells_j = want(ctx, *grid_j, "/grid", "cells");
    if (!lo_j || !hi_j || !cells_j) return result;
    const auto lo = want_number(ctx, *lo_j, "/grid/lo");
    const auto hi = want_number(ctx, *hi_j, "/grid/hi");
    if (!lo || !hi) return result;
    if (!cells_j->is_number_integer() || cells_j->get<long long>() < 2 || !(*lo < *hi)) {
      ctx.add("/grid", "grid_spec_invalid", "grid needs lo < hi and integer cells >= 2");
      return result;
    }
    GridSpec grid{*lo, *hi, static_cast<std::size_t>(cells_j->get<long long>())};
    auto mu = parse_grid_prior(ctx, *mu_j, "/mu", grid);
    auto nu = parse_grid_prior(ctx, *nu_j, "/nu", grid);
    if (!mu || !nu) return result;
    for (std::size_t i = 0; i < mu->cells(); ++i) {
      if (nu->values()[i] == 0.0 && mu->values()[i] != 0.0) {
        std::ostringstream os;
        os << "mu places mass on grid cell " << i << " where nu has none";
        ctx.add("/mu", "absolute_continuity_violation", os.str());
        return result;
      }
    }
    ExperimentSpec spec{
        GridExperiment{g->transition, g->measurement, grid, std::move(*mu), std::move(*nu)},
        *horizon, *trials, seed};
    result.config = ExperimentConfig{std::move(spec), model.name, ""};
    return result;
  }

  ctx.add("/backend", "backend_invalid", "backend must be \"finite\" or \"grid\"");
  return result;
}

ConfigParseResult load_experiment_file(const std::string& path) {
  const std::string text = read_file(path);

  // Resolve the model reference first; its diagnostics surface alongside the
  // config's own.
  ConfigParseResult result;
  Ctx ctx{&result.diagnostics};
  const json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    ctx.add("", "syntax_error", "document is not valid JSON");
    return result;
  }
  if (!doc.is_object()) {
    ctx.add("", "wrong_type", "top level must be an object");
    return result;
  }
  const json* model_j = want(ctx, doc, "", "model");
  if (!model_j) return result;
  const auto model_rel = want_string(ctx, *model_j, "/model");
  if (!model_rel) return result;

  std::filesystem::path model_path(*model_rel);
  if (model_path.is_relative()) {
    model_path = std::filesystem::path(path).parent_path() / model_path;
  }
  ModelParseResult model = load_model_file(model_path.string());  // IoError propagates
  if (!model.ok()) {
    for (auto& d : model.diagnostics) {
      d.path = "model:" + d.path;
      result.diagnostics.push_back(std::move(d));
    }
    return result;
  }
  result = parse_experiment(text, *model.model);
  if (result.ok()) result.config->model_path = model_path.string();
  return result;
}

}  // namespace filterstab
