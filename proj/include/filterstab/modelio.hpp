#ifndef FILTERSTAB_MODELIO_HPP
#define FILTERSTAB_MODELIO_HPP

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "filterstab/filter.hpp"
#include "filterstab/kernels.hpp"
#include "filterstab/simulate.hpp"

namespace filterstab {

// One validation finding: a JSON-pointer-style path into the offending
// document, a stable machine-readable rule id, and a human explanation.
struct Diagnostic {
  std::string path;
  std::string rule;
  std::string message;
};

std::string format_diagnostics(const std::vector<Diagnostic>& diags);

enum class ModelKind { finite, gaussian1d };

struct FinitePomp {
  StochasticMatrix t;
  StochasticMatrix q;
  ActionKernels actions;  // optional per-action transition kernels
};

struct GaussianPomp {
  Gaussian1DKernel transition;
  Gaussian1DKernel measurement;
};

struct PompModel {
  std::string name;
  int version = 1;
  std::variant<FinitePomp, GaussianPomp> model;

  ModelKind kind() const {
    return std::holds_alternative<FinitePomp>(model) ? ModelKind::finite
                                                     : ModelKind::gaussian1d;
  }
  const FinitePomp* finite() const { return std::get_if<FinitePomp>(&model); }
  const GaussianPomp* gaussian() const { return std::get_if<GaussianPomp>(&model); }
};

struct ModelParseResult {
  std::optional<PompModel> model;        // set iff diagnostics is empty
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return model.has_value(); }
};

// Parses and validates a version-1 model document. Never throws on bad input;
// every problem is reported as a diagnostic.
ModelParseResult parse_model(std::string_view text);

// Canonical serialization: object keys sorted, shortest decimal that
// round-trips each double exactly. Equal models produce identical bytes.
std::string serialize_model(const PompModel& m);

// File wrappers; unreadable/unwritable paths raise IoError.
ModelParseResult load_model_file(const std::string& path);
void save_model_file(const std::string& path, const PompModel& m);

struct ExperimentConfig {
  ExperimentSpec spec;
  std::string model_name;
  std::string model_path;  // as resolved, for reporting
};

struct ConfigParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return config.has_value(); }
};

// Loads an experiment config; the referenced model file is resolved relative
// to the config's directory and validated as part of the result.
ConfigParseResult load_experiment_file(const std::string& path);

// Same, with the model document supplied separately (for in-memory use).
ConfigParseResult parse_experiment(std::string_view config_text, const PompModel& model);

}  // namespace filterstab

#endif  // FILTERSTAB_MODELIO_HPP
