// filterstab command-line front end. Links only the public C API.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "filterstab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int exit_code(fs_status s) {
  switch (s) {
    case FS_OK:
      return kExitOk;
    case FS_ERR_IO:
      return kExitIo;
    default:
      return kExitValidation;
  }
}

int fail(fs_status s) {
  std::fprintf(stderr, "error: %s\n", fs_last_error());
  return exit_code(s);
}

// Temp-file-plus-rename so a crash never leaves a half-written artifact.
bool write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    if (!out) return false;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  return !ec;
}

unsigned threads_from_env() {
  const char* v = std::getenv("FILTERSTAB_THREADS");
  if (v == nullptr || *v == '\0') return 0;
  char* end = nullptr;
  const unsigned long n = std::strtoul(v, &end, 10);
  if (end == nullptr || *end != '\0') return 0;  // unparsable -> auto
  return static_cast<unsigned>(n);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string fmt_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvBuilder {
  std::string text = "metric,value\n";
  void add(const char* metric, double value) {
    text += metric;
    text += ',';
    text += fmt_full(value);
    text += '\n';
  }
  void add(const char* metric, const std::string& value) {
    text += metric;
    text += ',';
    text += value;
    text += '\n';
  }
};

int emit_csv(const std::string& path, const std::string& content) {
  if (path.empty()) return kExitOk;
  if (!write_file_atomic(path, content)) {
    std::fprintf(stderr, "error: cannot write csv artifact: %s\n", path.c_str());
    return kExitIo;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& model_path, const std::string& csv_path, bool quiet) {
  fs_model* model = nullptr;
  fs_status s = fs_model_load(model_path.c_str(), &model);
  if (s != FS_OK) return fail(s);

  fs_analysis* a = nullptr;
  s = fs_model_analyze(model, &a);
  if (s != FS_OK) {
    fs_model_free(model);
    return fail(s);
  }

  const double dt = fs_analysis_delta_t(a);
  const double dq = fs_analysis_delta_q(a);
  const double alpha = fs_analysis_alpha(a);
  const bool stable = fs_analysis_is_stable(a) != 0;
  const bool controlled = fs_analysis_is_controlled(a) != 0;
  double eps = 0.0;
  const bool mixing = fs_analysis_mixing(a, &eps) != 0;

  if (!quiet) {
    std::printf("model    : %s (%s)\n", fs_model_name(model), fs_model_kind(model));
    if (controlled) {
      std::printf("delta~(T): %s  (infimum over actions)\n", fmt(dt).c_str());
      for (size_t i = 0; i < fs_analysis_action_count(a); ++i) {
        const char* name = nullptr;
        double delta = 0.0;
        fs_analysis_action(a, i, &name, &delta);
        std::printf("           action %-12s delta(T) = %s\n", name, fmt(delta).c_str());
      }
    } else {
      std::printf("delta(T) : %s\n", fmt(dt).c_str());
    }
    std::printf("delta(Q) : %s\n", fmt(dq).c_str());
    std::printf("alpha    : (1 - delta(T)) * (2 - delta(Q)) = %s\n", fmt(alpha).c_str());
    std::printf("verdict  : %s\n",
                stable ? "exponentially stable (alpha < 1)"
                       : "not certified stable (alpha >= 1)");
    if (strcmp(fs_model_kind(model), "finite") == 0) {
      if (mixing) {
        double factor = 0.0;
        fs_analysis_hilbert_factor(a, 1, &factor);
        std::printf("mixing   : T is mixing, epsilon = %s; one-step Hilbert baseline factor = %s\n",
                    fmt(eps).c_str(), fmt(factor).c_str());
      } else {
        std::printf("mixing   : T is not mixing\n");
      }
    } else {
      std::printf("mixing   : bounded-mean additive-Gaussian kernels are never mixing\n");
    }
  }

  CsvBuilder csv;
  csv.add("delta_t", dt);
  csv.add("delta_q", dq);
  csv.add("alpha", alpha);
  csv.add("stable", std::string(stable ? "1" : "0"));
  csv.add("mixing", std::string(mixing ? "1" : "0"));
  if (mixing) csv.add("mixing_epsilon", eps);

  fs_analysis_free(a);
  fs_model_free(model);
  return emit_csv(csv_path, csv.text);
}

int cmd_validate(const std::string& model_path, const std::string& csv_path, bool quiet) {
  fs_model* model = nullptr;
  const fs_status s = fs_model_load(model_path.c_str(), &model);
  if (s != FS_OK) return fail(s);
  if (!quiet) {
    std::printf("ok: %s (%s)\n", fs_model_name(model), fs_model_kind(model));
  }
  CsvBuilder csv;
  csv.add("valid", std::string("1"));
  csv.add("name", std::string(fs_model_name(model)));
  csv.add("kind", std::string(fs_model_kind(model)));
  fs_model_free(model);
  return emit_csv(csv_path, csv.text);
}

int cmd_simulate(const std::string& config_path, const std::string& csv_path, long long seed,
                 bool quiet) {
  fs_experiment* e = nullptr;
  const fs_status s = fs_experiment_run_file(config_path.c_str(), seed, threads_from_env(), &e);
  if (s != FS_OK) return fail(s);

  const size_t steps = fs_experiment_steps(e);
  const size_t total = fs_experiment_total_trials(e);
  const size_t excluded = fs_experiment_excluded_trials(e);
  double max_ratio = 0.0;
  bool have_ratio = false;
  for (size_t n = 0; n + 1 < steps; ++n) {
    double r = 0.0;
    if (fs_experiment_ratio(e, n, &r) != 0 && (!have_ratio || r > max_ratio)) {
      max_ratio = r;
      have_ratio = true;
    }
  }

  if (!quiet) {
    std::printf("trials        : %zu (excluded %zu)\n", total, excluded);
    if (fs_experiment_exclusion_warning(e) != 0) {
      std::printf("warning       : more than 1%% of trials hit a degenerate normalizer\n");
    }
    std::printf("prior TV      : %s\n", fmt(fs_experiment_prior_tv(e)).c_str());
    std::printf("alpha         : %s (delta_T %s, delta_Q %s)\n",
                fmt(fs_experiment_alpha(e)).c_str(), fmt(fs_experiment_delta_t(e)).c_str(),
                fmt(fs_experiment_delta_q(e)).c_str());
    std::printf("final mean TV : %s\n", fmt(fs_experiment_mean_tv(e, steps - 1)).c_str());
    if (have_ratio) {
      std::printf("max step ratio: %s\n", fmt(max_ratio).c_str());
    } else {
      std::printf("max step ratio: undefined (all steps below the noise guard)\n");
    }
    std::printf("envelope      : %s\n", fs_experiment_envelope_ok(e) != 0
                                            ? "satisfied (mean <= envelope + 4*ci at every step)"
                                            : "VIOLATED");
  }

  int rc = kExitOk;
  if (!csv_path.empty()) {
    char* text = nullptr;
    if (fs_experiment_csv(e, &text) != FS_OK) {
      fs_experiment_free(e);
      return fail(FS_ERR_INTERNAL);
    }
    rc = emit_csv(csv_path, text);
    fs_string_free(text);
  }
  fs_experiment_free(e);
  return rc;
}

int cmd_table1(std::vector<double> ratios, const std::string& csv_path, bool quiet) {
  if (ratios.empty()) {
    ratios = {1.5, 1.4, 1.3, 1.2, 1.1, 1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3};
  }
  struct Row {
    double rt = 0.0;
    double delta_t = 0.0;
    fs_ratio_kind kind = FS_RATIO_THRESHOLD;
    double threshold = 0.0;
    double delta_q = 0.0;  // required delta(Q) at the threshold
  };
  std::vector<Row> rows;
  for (const double rt : ratios) {
    Row row;
    row.rt = rt;
    fs_status s = fs_dobrushin_gaussian(1.0, rt, &row.delta_t);
    if (s != FS_OK) return fail(s);
    s = fs_min_measurement_ratio(rt, &row.threshold, &row.kind);
    if (s != FS_OK) return fail(s);
    if (row.kind == FS_RATIO_THRESHOLD) {
      s = fs_dobrushin_gaussian(1.0, row.threshold, &row.delta_q);
      if (s != FS_OK) return fail(s);
    }
    rows.push_back(row);
  }

  if (!quiet) {
    auto print_row = [&](const char* label, auto value_of) {
      std::printf("%-12s", label);
      for (const Row& r : rows) std::printf(" %9s", value_of(r).c_str());
      std::printf("\n");
    };
    print_row("sigma_t/t", [](const Row& r) { return fmt(r.rt); });
    print_row("sigma_q/q", [](const Row& r) {
      if (r.kind == FS_RATIO_NOT_REQUIRED) return std::string("N/A");
      if (r.kind == FS_RATIO_UNBOUNDED) return std::string("inf");
      return fmt(r.threshold);
    });
    print_row("delta(T)", [](const Row& r) { return fmt(r.delta_t); });
    print_row("delta(Q)", [](const Row& r) {
      if (r.kind == FS_RATIO_NOT_REQUIRED) return std::string("N/A");
      if (r.kind == FS_RATIO_UNBOUNDED) return std::string("1");
      return fmt(r.delta_q);
    });
  }

  std::string csv = "sigma_t_over_t,min_sigma_q_over_q,delta_t,delta_q_required\n";
  for (const Row& r : rows) {
    csv += fmt_full(r.rt);
    csv += ',';
    if (r.kind == FS_RATIO_NOT_REQUIRED) {
      csv += "NA,";
    } else if (r.kind == FS_RATIO_UNBOUNDED) {
      csv += "inf,";
    } else {
      csv += fmt_full(r.threshold);
      csv += ',';
    }
    csv += fmt_full(r.delta_t);
    csv += ',';
    if (r.kind == FS_RATIO_NOT_REQUIRED) {
      csv += "NA";
    } else if (r.kind == FS_RATIO_UNBOUNDED) {
      csv += "1";
    } else {
      csv += fmt_full(r.delta_q);
    }
    csv += '\n';
  }
  return emit_csv(csv_path, csv);
}

int cmd_example3(const std::string& csv_path, bool quiet) {
  // Built-in three-state demo: a Bayes update can push two priors apart, and
  // the (2 - delta(Q)) factor bounds by how much in expectation.
  const double mu[3] = {0.05, 0.65, 0.3};
  const double nu[3] = {0.2, 0.65, 0.15};
  const double q[9] = {0.1, 0.3, 0.6, 0.5, 0.3, 0.2, 0.9, 0.1, 0.0};

  double prior_tv = 0.0, posterior = 0.0, delta_q = 0.0;
  fs_status s = fs_tv_distance(mu, nu, 3, &prior_tv);
  if (s != FS_OK) return fail(s);
  s = fs_expected_bayes_expansion(mu, nu, 3, q, 3, &posterior);
  if (s != FS_OK) return fail(s);
  s = fs_dobrushin_finite(q, 3, 3, &delta_q);
  if (s != FS_OK) return fail(s);

  const double bound_factor = 2.0 - delta_q;
  const double bound = bound_factor * prior_tv;
  const double ratio = posterior / prior_tv;

  if (!quiet) {
    std::printf("prior TV distance     : %s\n", fmt(prior_tv).c_str());
    std::printf("expected posterior TV : %s\n", fmt(posterior).c_str());
    std::printf("delta(Q)              : %s\n", fmt(delta_q).c_str());
    std::printf("expansion bound       : (2 - delta(Q)) * prior TV = %s * %s = %s\n",
                fmt(bound_factor).c_str(), fmt(prior_tv).c_str(), fmt(bound).c_str());
    std::printf("observed expansion    : %s (ratio posterior/prior, under the %s bound)\n",
                fmt(ratio).c_str(), fmt(bound_factor).c_str());
  }

  CsvBuilder csv;
  csv.add("prior_tv", prior_tv);
  csv.add("expected_posterior_tv", posterior);
  csv.add("delta_q", delta_q);
  csv.add("bound", bound);
  csv.add("expansion_ratio", ratio);
  return emit_csv(csv_path, csv.text);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"filter stability analysis for partially observed Markov processes"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress human-readable output");

  std::string model_path, config_path, csv_path;
  long long seed = -1;
  std::vector<double> ratios;

  auto* analyze = app.add_subcommand("analyze", "Dobrushin coefficients and stability verdict");
  analyze->add_option("model", model_path, "model file")->required();
  analyze->add_option("--csv", csv_path, "write a metric,value csv artifact");

  auto* validate = app.add_subcommand("validate", "validate a model file");
  validate->add_option("model", model_path, "model file")->required();
  validate->add_option("--csv", csv_path, "write a metric,value csv artifact");

  auto* simulate = app.add_subcommand("simulate", "seeded dual-filter Monte Carlo experiment");
  simulate->add_option("config", config_path, "experiment config file")->required();
  simulate->add_option("--csv", csv_path, "write per-step stability stats as csv");
  simulate->add_option("--seed", seed, "override the config seed");

  auto* table1 = app.add_subcommand(
      "table1", "minimum measurement-noise ratios for additive-Gaussian models");
  table1->add_option("--ratios", ratios, "transition ratios sigma_t/t to tabulate");
  table1->add_option("--csv", csv_path, "write the table as csv");

  auto* example3 = app.add_subcommand("example3", "built-in Bayes-expansion demo");
  example3->add_option("--csv", csv_path, "write the metrics as csv");

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) return cmd_analyze(model_path, csv_path, quiet);
  if (validate->parsed()) return cmd_validate(model_path, csv_path, quiet);
  if (simulate->parsed()) return cmd_simulate(config_path, csv_path, seed, quiet);
  if (table1->parsed()) return cmd_table1(ratios, csv_path, quiet);
  if (example3->parsed()) return cmd_example3(csv_path, quiet);
  return kExitValidation;
}
