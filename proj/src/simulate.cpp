#include "filterstab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "filterstab/errors.hpp"
#include "filterstab/stability.hpp"

namespace filterstab {
namespace {

std::size_t sample_categorical(std::span<const double> probs, double u) {
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;  // u landed in the rounding slack past the last cell
}

std::size_t sample_grid_cell(const GridDensity& d, double u) {
  const double h = d.cell_width();
  double cum = 0.0;
  for (std::size_t i = 0; i < d.cells(); ++i) {
    cum += d.values()[i] * h;
    if (u < cum) return i;
  }
  return d.cells() - 1;
}

}  // namespace

SampledPath sample_trajectory(const StochasticMatrix& t, const StochasticMatrix& q,
                              const FiniteDistribution& prior, std::size_t n,
                              std::uint64_t seed) {
  if (n < 1) throw ContractViolation("sample_trajectory: horizon must be >= 1");
  if (t.rows() != t.cols() || t.rows() != prior.size() || q.rows() != prior.size()) {
    throw ContractViolation("sample_trajectory: kernel shapes must match the prior");
  }
  const CounterRng rng{seed};
  SampledPath path;
  path.states.resize(n + 1);
  path.observations.resize(n + 1);
  path.states[0] = sample_categorical(prior.probs(), rng.uniform(0, kDrawState));
  for (std::size_t k = 0; k <= n; ++k) {
    path.observations[k] = sample_categorical(q.row(path.states[k]), rng.uniform(k, kDrawObservation));
    if (k < n) {
      path.states[k + 1] =
          sample_categorical(t.row(path.states[k]), rng.uniform(k + 1, kDrawState));
    }
  }
  return path;
}

SampledRealPath sample_trajectory(const Gaussian1DKernel& f, const Gaussian1DKernel& g,
                                  const GridDensity& prior, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ContractViolation("sample_trajectory: horizon must be >= 1");
  const CounterRng rng{seed};
  SampledRealPath path;
  path.states.resize(n + 1);
  path.observations.resize(n + 1);
  const std::size_t cell = sample_grid_cell(prior, rng.uniform(0, kDrawState));
  path.states[0] = prior.lo() +
                   (static_cast<double>(cell) + rng.uniform(0, kDrawCellOffset)) * prior.cell_width();
  for (std::size_t k = 0; k <= n; ++k) {
    path.observations[k] = g.mean(path.states[k]) + g.sigma() * rng.normal(k, kDrawObservation);
    if (k < n) {
      path.states[k + 1] = f.mean(path.states[k]) + f.sigma() * rng.normal(k + 1, kDrawState);
    }
  }
  return path;
}

namespace {

struct TrialResult {
  bool excluded = false;
  std::vector<double> tv;  // per-step gap, horizon+1 entries when included
};

TrialResult run_finite_trial(const FiniteExperiment& m, const LikelihoodTable& like,
                             std::size_t horizon, std::uint64_t trial_seed) {
  const SampledPath path = sample_trajectory(m.t, m.q, m.mu, horizon, trial_seed);
  // Both filters consume the single observation record generated under mu.
  const FilterTrajectory true_traj = run_filter(m.mu, path.observations, m.t, like);
  const FilterTrajectory false_traj = run_filter(m.nu, path.observations, m.t, like);
  TrialResult r;
  if (true_traj.degenerate() || false_traj.degenerate()) {
    r.excluded = true;
    return r;
  }
  r.tv.resize(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k) {
    r.tv[k] = tv_distance(true_traj.states[k], false_traj.states[k]);
  }
  return r;
}

TrialResult run_grid_trial(const GridExperiment& m, const GridTransition& trans,
                           const GridLikelihood& like, std::size_t horizon,
                           std::uint64_t trial_seed) {
  const SampledRealPath path = sample_trajectory(m.f, m.g, m.mu, horizon, trial_seed);
  const GridFilterTrajectory true_traj = run_filter(m.mu, path.observations, trans, like);
  const GridFilterTrajectory false_traj = run_filter(m.nu, path.observations, trans, like);
  TrialResult r;
  if (true_traj.degenerate() || false_traj.degenerate()) {
    r.excluded = true;
    return r;
  }
  r.tv.resize(horizon + 1);
  for (std::size_t k = 0; k <= horizon; ++k) {
    r.tv[k] = tv_distance(true_traj.states[k], false_traj.states[k]);
  }
  return r;
}

void check_priors_comparable(const FiniteExperiment& m) {
  if (m.mu.size() != m.nu.size()) {
    throw ContractViolation("dual_filter_experiment: priors must have equal length");
  }
  for (std::size_t i = 0; i < m.mu.size(); ++i) {
    if (m.nu[i] == 0.0 && m.mu[i] != 0.0) {
      std::ostringstream os;
      os << "dual_filter_experiment: mu is not absolutely continuous w.r.t. nu "
         << "(mu has mass at support index " << i << " where nu has none)";
      throw AbsoluteContinuityError(os.str());
    }
  }
}

void check_priors_comparable(const GridExperiment& m) {
  for (std::size_t i = 0; i < m.mu.cells(); ++i) {
    if (m.nu.values()[i] == 0.0 && m.mu.values()[i] != 0.0) {
      std::ostringstream os;
      os << "dual_filter_experiment: mu is not absolutely continuous w.r.t. nu "
         << "(mu has mass on grid cell " << i << " where nu has none)";
      throw AbsoluteContinuityError(os.str());
    }
  }
}

}  // namespace

bool StabilityStats::envelope_ok() const {
  for (std::size_t n = 0; n < mean_tv.size(); ++n) {
    if (!(mean_tv[n] <= envelope[n] + 4.0 * ci95[n])) return false;
  }
  return true;
}

std::optional<double> StabilityStats::max_ratio() const {
  std::optional<double> best;
  for (const auto& r : ratio) {
    if (r && (!best || *r > *best)) best = *r;
  }
  return best;
}

std::vector<std::optional<double>> empirical_contraction(std::span<const double> mean_tv,
                                                         std::span<const double> ci95) {
  if (mean_tv.size() != ci95.size()) {
    throw ContractViolation("empirical_contraction: series lengths differ");
  }
  std::vector<std::optional<double>> ratios;
  if (mean_tv.empty()) return ratios;
  ratios.resize(mean_tv.size() - 1);
  for (std::size_t n = 0; n + 1 < mean_tv.size(); ++n) {
    if (mean_tv[n] > 10.0 * ci95[n] && mean_tv[n] > 0.0) {
      ratios[n] = mean_tv[n + 1] / mean_tv[n];
    }
  }
  return ratios;
}

std::vector<std::optional<double>> empirical_contraction(const StabilityStats& stats) {
  return empirical_contraction(stats.mean_tv, stats.ci95);
}

StabilityStats dual_filter_experiment(const ExperimentSpec& spec, unsigned threads) {
  if (spec.horizon < 1) throw ContractViolation("dual_filter_experiment: horizon must be >= 1");
  if (spec.trials < 1) throw ContractViolation("dual_filter_experiment: trials must be >= 1");

  StabilityStats stats;
  stats.total_trials = spec.trials;

  // Closed-form quantities for the envelope.
  std::optional<LikelihoodTable> finite_like;
  std::optional<GridTransition> grid_trans;
  std::optional<GridLikelihood> grid_like;
  if (const auto* m = std::get_if<FiniteExperiment>(&spec.model)) {
    check_priors_comparable(*m);
    if (m->q.rows() != m->t.rows() || m->t.rows() != m->t.cols() ||
        m->mu.size() != m->t.rows()) {
      throw ContractViolation("dual_filter_experiment: kernel/prior shape mismatch");
    }
    stats.delta_t = dobrushin_finite(m->t);
    stats.delta_q = dobrushin_finite(m->q);
    stats.tv0 = tv_distance(m->mu, m->nu);
    finite_like.emplace(m->q);
  } else {
    const auto& gm = std::get<GridExperiment>(spec.model);
    check_priors_comparable(gm);
    stats.delta_t = dobrushin_gaussian_analytic(gm.f);
    stats.delta_q = dobrushin_gaussian_analytic(gm.g);
    stats.tv0 = tv_distance(gm.mu, gm.nu);
    grid_trans.emplace(gm.f, gm.grid);
    grid_like.emplace(gm.g);
  }
  stats.alpha = contraction_coefficient(stats.delta_t, stats.delta_q);

  // Every trial is a pure function of (spec.seed xor trial index); workers may
  // claim trials in any order without affecting the aggregate.
  std::vector<TrialResult> results(spec.trials);
  auto worker_body = [&](std::size_t trial) {
    const std::uint64_t trial_seed = spec.seed ^ static_cast<std::uint64_t>(trial);
    if (const auto* m = std::get_if<FiniteExperiment>(&spec.model)) {
      results[trial] = run_finite_trial(*m, *finite_like, spec.horizon, trial_seed);
    } else {
      results[trial] = run_grid_trial(std::get<GridExperiment>(spec.model), *grid_trans,
                                      *grid_like, spec.horizon, trial_seed);
    }
  };

  unsigned nthreads = threads != 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, spec.trials));
  if (nthreads <= 1) {
    for (std::size_t t = 0; t < spec.trials; ++t) worker_body(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (unsigned w = 0; w < nthreads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < spec.trials; t = next.fetch_add(1)) {
          worker_body(t);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  const std::size_t steps = spec.horizon + 1;
  stats.mean_tv.assign(steps, 0.0);
  stats.std_dev.assign(steps, 0.0);
  stats.ci95.assign(steps, 0.0);
  stats.envelope.assign(steps, 0.0);

  std::size_t included = 0;
  for (const TrialResult& r : results) {
    if (r.excluded) {
      ++stats.excluded_trials;
      continue;
    }
    ++included;
    for (std::size_t k = 0; k < steps; ++k) stats.mean_tv[k] += r.tv[k];
  }
  stats.exclusion_warning =
      stats.excluded_trials * 100 > stats.total_trials;  // strict 1% threshold

  if (included > 0) {
    for (std::size_t k = 0; k < steps; ++k) stats.mean_tv[k] /= static_cast<double>(included);
    if (included > 1) {
      for (const TrialResult& r : results) {
        if (r.excluded) continue;
        for (std::size_t k = 0; k < steps; ++k) {
          const double d = r.tv[k] - stats.mean_tv[k];
          stats.std_dev[k] += d * d;
        }
      }
      for (std::size_t k = 0; k < steps; ++k) {
        stats.std_dev[k] = std::sqrt(stats.std_dev[k] / static_cast<double>(included - 1));
        stats.ci95[k] = 1.96 * stats.std_dev[k] / std::sqrt(static_cast<double>(included));
      }
    }
  } else {
    const double nan = std::nan("");
    stats.mean_tv.assign(steps, nan);
    stats.std_dev.assign(steps, nan);
    stats.ci95.assign(steps, nan);
  }

  for (std::size_t k = 0; k < steps; ++k) {
    stats.envelope[k] = stability_envelope(k, stats.delta_t, stats.delta_q, stats.tv0);
  }
  stats.ratio = empirical_contraction(stats);
  return stats;
}

std::string stats_to_csv(const StabilityStats& stats) {
  std::string out = "step,mean_tv,std,ci95,envelope,ratio,excluded\n";
  char buf[512];
  for (std::size_t k = 0; k < stats.mean_tv.size(); ++k) {
    std::string ratio_field;
    if (k < stats.ratio.size() && stats.ratio[k]) {
      std::snprintf(buf, sizeof buf, "%.17g", *stats.ratio[k]);
      ratio_field = buf;
    }
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%s,%zu\n", k, stats.mean_tv[k],
                  stats.std_dev[k], stats.ci95[k], stats.envelope[k], ratio_field.c_str(),
                  stats.excluded_trials);
    out += buf;
  }
  return out;
}

}  // namespace filterstab
