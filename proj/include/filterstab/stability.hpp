#ifndef FILTERSTAB_STABILITY_HPP
#define FILTERSTAB_STABILITY_HPP

#include <cstddef>

#include "filterstab/filter.hpp"
#include "filterstab/kernels.hpp"
#include "filterstab/measures.hpp"

namespace filterstab {

// alpha = (1 - delta_T)(2 - delta_Q); the filter update is a contraction in
// expected total variation exactly when alpha < 1. Inputs must lie in [0,1].
double contraction_coefficient(double delta_t, double delta_q);

// Bound on the expected filter gap at step n for priors tv0 apart:
// (2 - delta_Q) * alpha^n * tv0.
double stability_envelope(std::size_t n, double delta_t, double delta_q, double tv0);

// Closed-form stability summary for a kernel pair.
struct StabilityReport {
  double delta_t = 0.0;
  double delta_q = 0.0;
  double alpha = 0.0;  // always (1-delta_t)(2-delta_q)
  bool stable = false;  // alpha < 1

  double envelope(std::size_t n, double tv0) const {
    return stability_envelope(n, delta_t, delta_q, tv0);
  }
};

StabilityReport make_stability_report(double delta_t, double delta_q);

// Exact finite-alphabet evaluation of the expected posterior gap
// sum_y N^mu(y) * || psi(mu,y) - psi(nu,y) ||_TV. Requires mu << nu; symbols
// with zero marginal weight under mu contribute nothing and are skipped.
double expected_bayes_expansion(const FiniteDistribution& mu, const FiniteDistribution& nu,
                                const StochasticMatrix& q);

// Worst-case Dobrushin coefficient over all control actions.
double controlled_delta_tilde(const ActionKernels& kernels);

// Hilbert-metric literature baseline: the factor
// (2 / (log(3) eps^2)) * ((1-eps^2)/(1+eps^2))^(m-1)
// bounding the filter gap after m more steps for a mixing kernel with
// coefficient eps in (0,1].
double hilbert_baseline_bound(double epsilon, std::size_t m);

// Smallest measurement-noise ratio sigma_q/q that certifies contraction for a
// transition-noise ratio rt = sigma_t/t in the additive-Gaussian family.
struct MeasurementRatio {
  enum class Kind {
    threshold,     // finite root: any larger ratio gives alpha < 1
    not_required,  // delta(T) > 1/2 already certifies stability for every Q
    unbounded,     // required delta(Q) >= 1: no finite ratio suffices
  };

  Kind kind = Kind::threshold;
  double value = 0.0;  // meaningful only for kind == threshold
};

MeasurementRatio min_measurement_ratio(double rt);

}  // namespace filterstab

#endif  // FILTERSTAB_STABILITY_HPP
