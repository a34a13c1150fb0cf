#include "filterstab/stability.hpp"

#include <cmath>
#include <sstream>

#include "filterstab/errors.hpp"
#include "filterstab/math_util.hpp"

namespace filterstab {
namespace {

void check_unit_interval(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream os;
    os << name << " must lie in [0,1], got " << v;
    throw ContractViolation(os.str());
  }
}

}  // namespace

double contraction_coefficient(double delta_t, double delta_q) {
  check_unit_interval(delta_t, "contraction_coefficient: delta_t");
  check_unit_interval(delta_q, "contraction_coefficient: delta_q");
  return (1.0 - delta_t) * (2.0 - delta_q);
}

double stability_envelope(std::size_t n, double delta_t, double delta_q, double tv0) {
  const double alpha = contraction_coefficient(delta_t, delta_q);
  if (!(tv0 >= 0.0 && tv0 <= 2.0 + 1e-12)) {
    throw ContractViolation("stability_envelope: tv0 must lie in [0,2]");
  }
  return (2.0 - delta_q) * std::pow(alpha, static_cast<double>(n)) * tv0;
}

StabilityReport make_stability_report(double delta_t, double delta_q) {
  StabilityReport r;
  r.delta_t = delta_t;
  r.delta_q = delta_q;
  r.alpha = contraction_coefficient(delta_t, delta_q);
  r.stable = r.alpha < 1.0;
  return r;
}

double expected_bayes_expansion(const FiniteDistribution& mu, const FiniteDistribution& nu,
                                const StochasticMatrix& q) {
  if (mu.size() != nu.size() || mu.size() != q.rows()) {
    throw ContractViolation("expected_bayes_expansion: dimension mismatch");
  }
  if (!is_absolutely_continuous(mu, nu)) {
    throw AbsoluteContinuityError("expected_bayes_expansion: requires mu << nu");
  }
  const LikelihoodTable like(q);
  double total = 0.0;
  for (std::size_t y = 0; y < q.cols(); ++y) {
    const double weight = normalizer(mu, y, like);  // marginal mass of y under mu
    if (weight < kNormalizerFloor) continue;
    const auto post_mu = bayes_update(mu, y, like);
    const auto post_nu = bayes_update(nu, y, like);
    if (!post_mu || !post_nu) continue;  // cannot happen when mu << nu
    total += weight * tv_distance(*post_mu, *post_nu);
  }
  return total;
}

double controlled_delta_tilde(const ActionKernels& kernels) {
  if (kernels.empty()) {
    throw ContractViolation("controlled_delta_tilde: needs at least one action kernel");
  }
  double worst = 1.0;
  for (const auto& [action, kernel] : kernels) {
    worst = std::min(worst, dobrushin_finite(kernel));
  }
  return worst;
}

double hilbert_baseline_bound(double epsilon, std::size_t m) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw ContractViolation("hilbert_baseline_bound: epsilon must lie in (0,1]");
  }
  if (m < 1) {
    throw ContractViolation("hilbert_baseline_bound: m must be >= 1");
  }
  const double e2 = epsilon * epsilon;
  const double lead = 2.0 / (std::log(3.0) * e2);
  const double ratio = (1.0 - e2) / (1.0 + e2);
  return lead * std::pow(ratio, static_cast<double>(m - 1));
}

MeasurementRatio min_measurement_ratio(double rt) {
  if (!(rt > 0.0)) {
    throw ContractViolation("min_measurement_ratio: rt must be positive");
  }
  const double delta_t = 2.0 * normal_cdf(-1.0 / rt);
  // delta(T) of 1/2 or more certifies stability for every measurement kernel.
  if (delta_t >= 0.5) return MeasurementRatio{MeasurementRatio::Kind::not_required, 0.0};

  const double required_dq = 2.0 - 1.0 / (1.0 - delta_t);
  auto delta_q_of = [](double rq) { return 2.0 * normal_cdf(-1.0 / rq); };

  double lo = 1e-6;
  double hi = 1e7;
  if (delta_q_of(lo) - required_dq >= 0.0) return MeasurementRatio{MeasurementRatio::Kind::threshold, lo};
  if (delta_q_of(hi) - required_dq <= 0.0) {
    // Required delta(Q) is 1 (or indistinguishable from it at the bracket
    // edge): no finite noise ratio reaches it.
    return MeasurementRatio{MeasurementRatio::Kind::unbounded, 0.0};
  }
  // Bisection to relative width 1e-9; delta_q_of is increasing in rq.
  while ((hi - lo) > 1e-9 * std::min(std::fabs(lo), std::fabs(hi))) {
    const double mid = 0.5 * (lo + hi);
    if (delta_q_of(mid) - required_dq < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return MeasurementRatio{MeasurementRatio::Kind::threshold, 0.5 * (lo + hi)};
}

}  // namespace filterstab
