#ifndef FILTERSTAB_SIMULATE_HPP
#define FILTERSTAB_SIMULATE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "filterstab/filter.hpp"
#include "filterstab/kernels.hpp"
#include "filterstab/measures.hpp"
#include "filterstab/rng.hpp"

namespace filterstab {

// Draw-slot convention shared by all samplers, so that every variate of a
// trial is addressed by (trial seed, step, slot):
//   slot 0 - state draw (initial state or transition noise)
//   slot 1 - observation draw
//   slot 2 - within-cell offset when sampling a grid density
inline constexpr std::uint64_t kDrawState = 0;
inline constexpr std::uint64_t kDrawObservation = 1;
inline constexpr std::uint64_t kDrawCellOffset = 2;

struct SampledPath {
  std::vector<std::size_t> states;        // x_0..x_n
  std::vector<std::size_t> observations;  // y_0..y_n
};

// Samples x_0 ~ prior, y_k ~ Q(.|x_k), x_{k+1} ~ T(.|x_k) for k = 0..n.
// Deterministic in (seed); n is the horizon, so paths have n+1 entries.
SampledPath sample_trajectory(const StochasticMatrix& t, const StochasticMatrix& q,
                              const FiniteDistribution& prior, std::size_t n,
                              std::uint64_t seed);

struct SampledRealPath {
  std::vector<double> states;
  std::vector<double> observations;
};

// Additive-Gaussian analogue: x_{k+1} = f(x_k) + sigma_t N, y_k = g(x_k) + sigma_q N.
SampledRealPath sample_trajectory(const Gaussian1DKernel& f, const Gaussian1DKernel& g,
                                  const GridDensity& prior, std::size_t n, std::uint64_t seed);

struct FiniteExperiment {
  StochasticMatrix t;
  StochasticMatrix q;
  FiniteDistribution mu;  // true prior: paths are generated under mu
  FiniteDistribution nu;  // misinformed prior for the second filter
};

struct GridExperiment {
  Gaussian1DKernel f;
  Gaussian1DKernel g;
  GridSpec grid;
  GridDensity mu;
  GridDensity nu;
};

struct ExperimentSpec {
  std::variant<FiniteExperiment, GridExperiment> model;
  std::size_t horizon = 1;   // steps after time 0; stats cover 0..horizon
  std::size_t trials = 1;
  std::uint64_t seed = 0;
};

// Per-step summary of the dual-filter Monte Carlo experiment. All series have
// horizon+1 entries except ratio, which has horizon (entry n relates step n+1
// to step n and is absent when the noise guard rejects it).
struct StabilityStats {
  std::vector<double> mean_tv;
  std::vector<double> std_dev;
  std::vector<double> ci95;
  std::vector<double> envelope;
  std::vector<std::optional<double>> ratio;

  std::size_t total_trials = 0;
  std::size_t excluded_trials = 0;
  bool exclusion_warning = false;  // more than 1% of trials excluded

  double delta_t = 0.0;
  double delta_q = 0.0;
  double alpha = 0.0;
  double tv0 = 0.0;

  // mean_tv[n] <= envelope[n] + 4 * ci95[n] at every step.
  bool envelope_ok() const;
  std::optional<double> max_ratio() const;
};

// Runs `trials` independent dual-filter trials: each samples one observation
// record under the true prior (trial seed = spec.seed xor trial index), runs
// the filter from both priors on that shared record and tracks the TV gap.
// Trials hitting a degenerate normalizer are excluded and counted. Results
// are identical for every `threads` value (0 = hardware concurrency).
StabilityStats dual_filter_experiment(const ExperimentSpec& spec, unsigned threads = 0);

// ratio[n] = mean[n+1]/mean[n], reported only where mean[n] > 10 * ci95[n]
// keeps the quotient meaningfully above the noise floor.
std::vector<std::optional<double>> empirical_contraction(std::span<const double> mean_tv,
                                                         std::span<const double> ci95);
std::vector<std::optional<double>> empirical_contraction(const StabilityStats& stats);

// CSV with header step,mean_tv,std,ci95,envelope,ratio,excluded; full-precision
// floats, empty ratio field where undefined, byte-stable across runs.
std::string stats_to_csv(const StabilityStats& stats);

}  // namespace filterstab

#endif  // FILTERSTAB_SIMULATE_HPP
