#include "filterstab.h"

#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "filterstab/errors.hpp"
#include "filterstab/modelio.hpp"
#include "filterstab/simulate.hpp"
#include "filterstab/stability.hpp"

using namespace filterstab;

namespace {

thread_local std::string g_last_error;

void set_error(std::string msg) { g_last_error = std::move(msg); }

fs_status to_status(const std::exception_ptr& eptr) {
  try {
    std::rethrow_exception(eptr);
  } catch (const IoError& e) {
    set_error(e.what());
    return FS_ERR_IO;
  } catch (const ContractViolation& e) {
    set_error(e.what());
    return FS_ERR_VALIDATION;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FS_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return FS_ERR_INTERNAL;
  }
}

template <typename Fn>
fs_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (...) {
    return to_status(std::current_exception());
  }
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fs_status require_args(bool ok) {
  if (!ok) {
    set_error("null argument");
    return FS_ERR_VALIDATION;
  }
  return FS_OK;
}

}  // namespace

struct fs_model {
  PompModel model;
};

struct fs_analysis {
  bool controlled = false;
  StabilityReport report;
  std::vector<std::pair<std::string, double>> per_action;
  std::optional<MixingCertificate> mixing;  // transition-kernel mixing, finite only
};

struct fs_experiment {
  StabilityStats stats;
};

extern "C" {

int fs_api_version(void) { return 1; }

const char* fs_last_error(void) { return g_last_error.c_str(); }

void fs_string_free(char* s) { delete[] s; }

/* ---- models ---- */

fs_status fs_model_load(const char* path, fs_model** out) {
  if (require_args(path && out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    ModelParseResult r = load_model_file(path);
    if (!r.ok()) {
      set_error(format_diagnostics(r.diagnostics));
      return FS_ERR_VALIDATION;
    }
    *out = new fs_model{std::move(*r.model)};
    return FS_OK;
  });
}

fs_status fs_model_parse(const char* json_text, fs_model** out) {
  if (require_args(json_text && out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    ModelParseResult r = parse_model(json_text);
    if (!r.ok()) {
      set_error(format_diagnostics(r.diagnostics));
      return FS_ERR_VALIDATION;
    }
    *out = new fs_model{std::move(*r.model)};
    return FS_OK;
  });
}

fs_status fs_model_serialize(const fs_model* m, char** out_text) {
  if (require_args(m && out_text) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    *out_text = dup_string(serialize_model(m->model));
    return FS_OK;
  });
}

const char* fs_model_name(const fs_model* m) { return m ? m->model.name.c_str() : ""; }

const char* fs_model_kind(const fs_model* m) {
  if (m == nullptr) return "";
  return m->model.kind() == ModelKind::finite ? "finite" : "gaussian1d";
}

void fs_model_free(fs_model* m) { delete m; }

/* ---- analysis ---- */

fs_status fs_model_analyze(const fs_model* m, fs_analysis** out) {
  if (require_args(m && out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    auto a = std::make_unique<fs_analysis>();
    if (const FinitePomp* f = m->model.finite()) {
      double delta_t = 0.0;
      if (!f->actions.empty()) {
        a->controlled = true;
        for (const auto& [name, kernel] : f->actions) {
          a->per_action.emplace_back(name, dobrushin_finite(kernel));
        }
        delta_t = controlled_delta_tilde(f->actions);
      } else {
        delta_t = dobrushin_finite(f->t);
      }
      a->report = make_stability_report(delta_t, dobrushin_finite(f->q));
      a->mixing = mixing_coefficient(f->t);
    } else {
      const GaussianPomp* g = m->model.gaussian();
      a->report = make_stability_report(dobrushin_gaussian_analytic(g->transition),
                                        dobrushin_gaussian_analytic(g->measurement));
      // Bounded-mean additive-Gaussian kernels are never mixing.
      a->mixing = std::nullopt;
    }
    *out = a.release();
    return FS_OK;
  });
}

double fs_analysis_delta_t(const fs_analysis* a) { return a->report.delta_t; }
double fs_analysis_delta_q(const fs_analysis* a) { return a->report.delta_q; }
double fs_analysis_alpha(const fs_analysis* a) { return a->report.alpha; }
int fs_analysis_is_stable(const fs_analysis* a) { return a->report.stable ? 1 : 0; }
int fs_analysis_is_controlled(const fs_analysis* a) { return a->controlled ? 1 : 0; }
size_t fs_analysis_action_count(const fs_analysis* a) { return a->per_action.size(); }

fs_status fs_analysis_action(const fs_analysis* a, size_t index, const char** name_out,
                             double* delta_out) {
  if (require_args(a && name_out && delta_out) != FS_OK) return FS_ERR_VALIDATION;
  if (index >= a->per_action.size()) {
    set_error("action index out of range");
    return FS_ERR_VALIDATION;
  }
  *name_out = a->per_action[index].first.c_str();
  *delta_out = a->per_action[index].second;
  return FS_OK;
}

int fs_analysis_mixing(const fs_analysis* a, double* epsilon_out) {
  if (a == nullptr || !a->mixing) return 0;
  if (epsilon_out != nullptr) *epsilon_out = a->mixing->epsilon;
  return 1;
}

fs_status fs_analysis_hilbert_factor(const fs_analysis* a, size_t m, double* out) {
  if (require_args(a && out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    if (!a->mixing) {
      set_error("hilbert factor requires a mixing transition kernel");
      return FS_ERR_VALIDATION;
    }
    *out = hilbert_baseline_bound(a->mixing->epsilon, m);
    return FS_OK;
  });
}

void fs_analysis_free(fs_analysis* a) { delete a; }

/* ---- experiments ---- */

fs_status fs_experiment_run_file(const char* config_path, long long seed_override,
                                 unsigned threads, fs_experiment** out) {
  if (require_args(config_path && out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    ConfigParseResult r = load_experiment_file(config_path);
    if (!r.ok()) {
      set_error(format_diagnostics(r.diagnostics));
      return FS_ERR_VALIDATION;
    }
    ExperimentSpec spec = std::move(r.config->spec);
    if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
    *out = new fs_experiment{dual_filter_experiment(spec, threads)};
    return FS_OK;
  });
}

size_t fs_experiment_steps(const fs_experiment* e) { return e->stats.mean_tv.size(); }
double fs_experiment_mean_tv(const fs_experiment* e, size_t step) {
  return e->stats.mean_tv.at(step);
}
double fs_experiment_std(const fs_experiment* e, size_t step) {
  return e->stats.std_dev.at(step);
}
double fs_experiment_ci95(const fs_experiment* e, size_t step) { return e->stats.ci95.at(step); }
double fs_experiment_envelope(const fs_experiment* e, size_t step) {
  return e->stats.envelope.at(step);
}

int fs_experiment_ratio(const fs_experiment* e, size_t step, double* ratio_out) {
  if (e == nullptr || step >= e->stats.ratio.size() || !e->stats.ratio[step]) return 0;
  if (ratio_out != nullptr) *ratio_out = *e->stats.ratio[step];
  return 1;
}

double fs_experiment_delta_t(const fs_experiment* e) { return e->stats.delta_t; }
double fs_experiment_delta_q(const fs_experiment* e) { return e->stats.delta_q; }
double fs_experiment_alpha(const fs_experiment* e) { return e->stats.alpha; }
double fs_experiment_prior_tv(const fs_experiment* e) { return e->stats.tv0; }
size_t fs_experiment_total_trials(const fs_experiment* e) { return e->stats.total_trials; }
size_t fs_experiment_excluded_trials(const fs_experiment* e) {
  return e->stats.excluded_trials;
}
int fs_experiment_exclusion_warning(const fs_experiment* e) {
  return e->stats.exclusion_warning ? 1 : 0;
}
int fs_experiment_envelope_ok(const fs_experiment* e) {
  return e->stats.envelope_ok() ? 1 : 0;
}

fs_status fs_experiment_csv(const fs_experiment* e, char** out_text) {
  if (require_args(e && out_text) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    *out_text = dup_string(stats_to_csv(e->stats));
    return FS_OK;
  });
}

void fs_experiment_free(fs_experiment* e) { delete e; }

/* ---- direct computations ---- */

fs_status fs_tv_distance(const double* p, const double* q, size_t n, double* out) {
  if (require_args(p && q && out && n > 0) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    FiniteDistribution dp(std::vector<double>(p, p + n));
    FiniteDistribution dq(std::vector<double>(q, q + n));
    *out = tv_distance(dp, dq);
    return FS_OK;
  });
}

fs_status fs_dobrushin_finite(const double* row_major, size_t rows, size_t cols, double* out) {
  if (require_args(row_major && out && rows > 0 && cols > 0) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    StochasticMatrix k(rows, cols, std::vector<double>(row_major, row_major + rows * cols));
    *out = dobrushin_finite(k);
    return FS_OK;
  });
}

fs_status fs_mixing_coefficient(const double* row_major, size_t rows, size_t cols,
                                int* mixing_out, double* epsilon_out) {
  if (require_args(row_major && mixing_out && rows > 0 && cols > 0) != FS_OK) {
    return FS_ERR_VALIDATION;
  }
  return guarded([&] {
    StochasticMatrix k(rows, cols, std::vector<double>(row_major, row_major + rows * cols));
    const auto cert = mixing_coefficient(k);
    *mixing_out = cert ? 1 : 0;
    if (cert && epsilon_out != nullptr) *epsilon_out = cert->epsilon;
    return FS_OK;
  });
}

fs_status fs_expected_bayes_expansion(const double* mu, const double* nu, size_t n,
                                      const double* q_row_major, size_t n_symbols,
                                      double* out) {
  if (require_args(mu && nu && q_row_major && out && n > 0 && n_symbols > 0) != FS_OK) {
    return FS_ERR_VALIDATION;
  }
  return guarded([&] {
    FiniteDistribution dmu(std::vector<double>(mu, mu + n));
    FiniteDistribution dnu(std::vector<double>(nu, nu + n));
    StochasticMatrix q(n, n_symbols,
                       std::vector<double>(q_row_major, q_row_major + n * n_symbols));
    *out = expected_bayes_expansion(dmu, dnu, q);
    return FS_OK;
  });
}

fs_status fs_dobrushin_gaussian(double bound, double sigma, double* out) {
  if (require_args(out != nullptr) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    if (!(bound >= 0.0)) {
      set_error("bound must be nonnegative");
      return FS_ERR_VALIDATION;
    }
    Gaussian1DKernel k(MeanFunction(AffineClipped{1.0, 0.0, bound}), sigma, bound);
    *out = dobrushin_gaussian_analytic(k);
    return FS_OK;
  });
}

fs_status fs_contraction_coefficient(double delta_t, double delta_q, double* out) {
  if (require_args(out != nullptr) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    *out = contraction_coefficient(delta_t, delta_q);
    return FS_OK;
  });
}

fs_status fs_stability_envelope(size_t n, double delta_t, double delta_q, double tv0,
                                double* out) {
  if (require_args(out != nullptr) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    *out = stability_envelope(n, delta_t, delta_q, tv0);
    return FS_OK;
  });
}

fs_status fs_hilbert_baseline(double epsilon, size_t m, double* out) {
  if (require_args(out != nullptr) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    *out = hilbert_baseline_bound(epsilon, m);
    return FS_OK;
  });
}

fs_status fs_min_measurement_ratio(double rt, double* threshold_out, fs_ratio_kind* kind_out) {
  if (require_args(threshold_out && kind_out) != FS_OK) return FS_ERR_VALIDATION;
  return guarded([&] {
    const MeasurementRatio r = min_measurement_ratio(rt);
    switch (r.kind) {
      case MeasurementRatio::Kind::threshold:
        *kind_out = FS_RATIO_THRESHOLD;
        *threshold_out = r.value;
        break;
      case MeasurementRatio::Kind::not_required:
        *kind_out = FS_RATIO_NOT_REQUIRED;
        *threshold_out = 0.0;
        break;
      case MeasurementRatio::Kind::unbounded:
        *kind_out = FS_RATIO_UNBOUNDED;
        *threshold_out = 0.0;
        break;
    }
    return FS_OK;
  });
}

} /* extern "C" */
