#include "filterstab/filter.hpp"

#include <cmath>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {

LikelihoodTable::LikelihoodTable(StochasticMatrix q) : q_(std::move(q)) {}

double normalizer(const FiniteDistribution& pi, std::size_t y, const LikelihoodTable& l) {
  if (pi.size() != l.states()) {
    throw ContractViolation("normalizer: distribution length must match likelihood states");
  }
  if (y >= l.symbols()) {
    throw ContractViolation("normalizer: observation symbol out of range");
  }
  double n = 0.0;
  for (std::size_t x = 0; x < pi.size(); ++x) n += l(x, y) * pi[x];
  return n;
}

double normalizer(const GridDensity& pi, double y, const GridLikelihood& l) {
  double n = 0.0;
  for (std::size_t i = 0; i < pi.cells(); ++i) {
    n += l(pi.cell_center(i), y) * pi.values()[i];
  }
  return n * pi.cell_width();
}

std::optional<FiniteDistribution> bayes_update(const FiniteDistribution& pi, std::size_t y,
                                               const LikelihoodTable& l) {
  if (pi.size() != l.states()) {
    throw ContractViolation("bayes_update: distribution length must match likelihood states");
  }
  if (y >= l.symbols()) {
    throw ContractViolation("bayes_update: observation symbol out of range");
  }
  std::vector<double> w(pi.size());
  for (std::size_t x = 0; x < pi.size(); ++x) w[x] = l(x, y) * pi[x];
  return SubProbability(std::move(w)).normalized();
}

std::optional<GridDensity> bayes_update(const GridDensity& pi,
                                        std::span<const double> likelihood_values) {
  if (likelihood_values.size() != pi.cells()) {
    throw ContractViolation("bayes_update: one likelihood value per cell required");
  }
  std::vector<double> w(pi.cells());
  double n = 0.0;
  for (std::size_t i = 0; i < pi.cells(); ++i) {
    w[i] = likelihood_values[i] * pi.values()[i];
    n += w[i];
  }
  n *= pi.cell_width();
  if (n < kNormalizerFloor) return std::nullopt;
  for (double& v : w) v /= n;
  return GridDensity(pi.lo(), pi.hi(), std::move(w));
}

std::optional<GridDensity> bayes_update(const GridDensity& pi, double y,
                                        const GridLikelihood& l) {
  std::vector<double> g(pi.cells());
  for (std::size_t i = 0; i < pi.cells(); ++i) g[i] = l(pi.cell_center(i), y);
  return bayes_update(pi, g);
}

std::optional<FiniteDistribution> filter_update(const FiniteDistribution& pi, std::size_t y,
                                                const StochasticMatrix& t,
                                                const LikelihoodTable& l) {
  return bayes_update(apply_kernel(t, pi), y, l);
}

std::optional<FiniteDistribution> filter_update_controlled(const FiniteDistribution& pi,
                                                           const std::string& u, std::size_t y,
                                                           const ActionKernels& kernels,
                                                           const LikelihoodTable& l) {
  const auto it = kernels.find(u);
  if (it == kernels.end()) {
    std::ostringstream os;
    os << "filter_update_controlled: unknown action \"" << u << "\"";
    throw ContractViolation(os.str());
  }
  return filter_update(pi, y, it->second, l);
}

std::optional<GridDensity> filter_update(const GridDensity& pi, double y,
                                         const GridTransition& t, const GridLikelihood& l,
                                         double* mass_defect) {
  return bayes_update(t.apply(pi, mass_defect), y, l);
}

FilterTrajectory run_filter(const FiniteDistribution& prior, std::span<const std::size_t> obs,
                            const StochasticMatrix& t, const LikelihoodTable& l) {
  if (obs.empty()) throw ContractViolation("run_filter: needs at least one observation");
  FilterTrajectory traj;
  traj.observations.assign(obs.begin(), obs.end());
  auto head = bayes_update(prior, obs[0], l);
  if (!head) {
    traj.degenerate_step = 0;
    return traj;
  }
  traj.states.push_back(std::move(*head));
  for (std::size_t k = 1; k < obs.size(); ++k) {
    auto next = filter_update(traj.states.back(), obs[k], t, l);
    if (!next) {
      traj.degenerate_step = k;
      return traj;
    }
    traj.states.push_back(std::move(*next));
  }
  return traj;
}

FilterTrajectory run_filter_controlled(const FiniteDistribution& prior,
                                       std::span<const std::size_t> obs,
                                       const ActionKernels& kernels,
                                       std::span<const std::string> policy,
                                       const LikelihoodTable& l) {
  if (obs.empty()) throw ContractViolation("run_filter: needs at least one observation");
  if (policy.size() + 1 != obs.size()) {
    throw ContractViolation("run_filter: policy must be one action shorter than observations");
  }
  FilterTrajectory traj;
  traj.observations.assign(obs.begin(), obs.end());
  auto head = bayes_update(prior, obs[0], l);
  if (!head) {
    traj.degenerate_step = 0;
    return traj;
  }
  traj.states.push_back(std::move(*head));
  for (std::size_t k = 1; k < obs.size(); ++k) {
    auto next = filter_update_controlled(traj.states.back(), policy[k - 1], obs[k], kernels, l);
    if (!next) {
      traj.degenerate_step = k;
      return traj;
    }
    traj.states.push_back(std::move(*next));
  }
  return traj;
}

GridFilterTrajectory run_filter(const GridDensity& prior, std::span<const double> obs,
                                const GridTransition& t, const GridLikelihood& l) {
  if (obs.empty()) throw ContractViolation("run_filter: needs at least one observation");
  GridFilterTrajectory traj;
  traj.observations.assign(obs.begin(), obs.end());
  auto head = bayes_update(prior, obs[0], l);
  if (!head) {
    traj.degenerate_step = 0;
    return traj;
  }
  traj.states.push_back(std::move(*head));
  for (std::size_t k = 1; k < obs.size(); ++k) {
    double defect = 0.0;
    auto next = filter_update(traj.states.back(), obs[k], t, l, &defect);
    traj.mass_defects.push_back(defect);
    if (!next) {
      traj.degenerate_step = k;
      return traj;
    }
    traj.states.push_back(std::move(*next));
  }
  return traj;
}

}  // namespace filterstab
