#ifndef FILTERSTAB_FILTER_HPP
#define FILTERSTAB_FILTER_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "filterstab/kernels.hpp"
#include "filterstab/measures.hpp"

namespace filterstab {

// Likelihood g(x,y) of a finite observation alphabet under the counting
// dominating measure, i.e. g(x,y) = Q(y|x). Rows integrate to 1.
class LikelihoodTable {
 public:
  explicit LikelihoodTable(StochasticMatrix q);

  std::size_t states() const { return q_.rows(); }
  std::size_t symbols() const { return q_.cols(); }
  double operator()(std::size_t x, std::size_t y) const { return q_(x, y); }
  const StochasticMatrix& matrix() const { return q_; }

 private:
  StochasticMatrix q_;
};

// Likelihood of a real-valued observation channel y = g(x) + N(0, sigma^2).
class GridLikelihood {
 public:
  explicit GridLikelihood(Gaussian1DKernel g) : g_(std::move(g)) {}

  double operator()(double x, double y) const { return g_.density(y, x); }
  const Gaussian1DKernel& kernel() const { return g_; }

 private:
  Gaussian1DKernel g_;
};

// N(y) = sum_x g(x,y) pi(x), the marginal observation weight of y under pi.
double normalizer(const FiniteDistribution& pi, std::size_t y, const LikelihoodTable& l);
double normalizer(const GridDensity& pi, double y, const GridLikelihood& l);

// Bayes operator psi: posterior proportional to g(.,y) pi(.), or nullopt when
// the normalizer vanishes (the degenerate-zero outcome).
std::optional<FiniteDistribution> bayes_update(const FiniteDistribution& pi, std::size_t y,
                                               const LikelihoodTable& l);
std::optional<GridDensity> bayes_update(const GridDensity& pi, double y,
                                        const GridLikelihood& l);
// Same update with the likelihood already evaluated per cell.
std::optional<GridDensity> bayes_update(const GridDensity& pi,
                                        std::span<const double> likelihood_values);

// One filter step: Bayes update of the kernel pushforward of pi.
std::optional<FiniteDistribution> filter_update(const FiniteDistribution& pi, std::size_t y,
                                                const StochasticMatrix& t,
                                                const LikelihoodTable& l);

using ActionKernels = std::map<std::string, StochasticMatrix>;

// Controlled filter step: same update driven by the kernel of action u.
std::optional<FiniteDistribution> filter_update_controlled(const FiniteDistribution& pi,
                                                           const std::string& u, std::size_t y,
                                                           const ActionKernels& kernels,
                                                           const LikelihoodTable& l);

// Grid filter step: discretized pushforward then Bayes update. mass_defect
// (when non-null) receives the prediction-step defect diagnostic.
std::optional<GridDensity> filter_update(const GridDensity& pi, double y,
                                         const GridTransition& t, const GridLikelihood& l,
                                         double* mass_defect = nullptr);

// Filter states pi_0..pi_k for one observation record. A vanished normalizer
// truncates the state sequence and records the offending step.
struct FilterTrajectory {
  std::vector<FiniteDistribution> states;
  std::vector<std::size_t> observations;
  std::optional<std::size_t> degenerate_step;

  bool degenerate() const { return degenerate_step.has_value(); }
};

struct GridFilterTrajectory {
  std::vector<GridDensity> states;
  std::vector<double> observations;
  std::vector<double> mass_defects;  // one prediction-defect entry per step >= 1
  std::optional<std::size_t> degenerate_step;

  bool degenerate() const { return degenerate_step.has_value(); }
};

// Runs the filter recursion: states[0] is the Bayes update of the prior under
// the first observation, states[k+1] the filter update under observation k+1.
FilterTrajectory run_filter(const FiniteDistribution& prior, std::span<const std::size_t> obs,
                            const StochasticMatrix& t, const LikelihoodTable& l);

// Controlled variant; policy[k] drives the transition into step k+1, so the
// policy must be one action shorter than the observation record.
FilterTrajectory run_filter_controlled(const FiniteDistribution& prior,
                                       std::span<const std::size_t> obs,
                                       const ActionKernels& kernels,
                                       std::span<const std::string> policy,
                                       const LikelihoodTable& l);

GridFilterTrajectory run_filter(const GridDensity& prior, std::span<const double> obs,
                                const GridTransition& t, const GridLikelihood& l);

}  // namespace filterstab

#endif  // FILTERSTAB_FILTER_HPP
