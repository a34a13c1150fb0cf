#include "filterstab/measures.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "filterstab/errors.hpp"

namespace filterstab {
namespace {

double checked_sum(const std::vector<double>& v, const char* what) {
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0)) {  // also rejects NaN
      std::ostringstream os;
      os << what << ": entry " << i << " is negative or not a number (" << v[i] << ")";
      throw ContractViolation(os.str());
    }
    sum += v[i];
  }
  return sum;
}

}  // namespace

FiniteDistribution::FiniteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw ContractViolation("FiniteDistribution: needs at least one entry");
  }
  const double sum = checked_sum(probs_, "FiniteDistribution");
  if (std::fabs(sum - 1.0) > kFiniteMassTol) {
    std::ostringstream os;
    os << "FiniteDistribution: mass defect " << std::fabs(sum - 1.0)
       << " exceeds tolerance " << kFiniteMassTol;
    throw ContractViolation(os.str());
  }
}

FiniteDistribution FiniteDistribution::uniform(std::size_t n) {
  return FiniteDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

FiniteDistribution FiniteDistribution::point_mass(std::size_t i, std::size_t n) {
  if (i >= n) throw ContractViolation("point_mass: index out of range");
  std::vector<double> v(n, 0.0);
  v[i] = 1.0;
  return FiniteDistribution(std::move(v));
}

GridDensity::GridDensity(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), values_(std::move(values)) {
  if (!(lo_ < hi_)) throw ContractViolation("GridDensity: lo must be below hi");
  if (values_.size() < 2) throw ContractViolation("GridDensity: needs at least two cells");
  const double sum = checked_sum(values_, "GridDensity");
  const double mass = sum * cell_width();
  if (std::fabs(mass - 1.0) > kGridMassTol) {
    std::ostringstream os;
    os << "GridDensity: mass defect " << std::fabs(mass - 1.0) << " exceeds tolerance "
       << kGridMassTol;
    throw ContractViolation(os.str());
  }
}

SubProbability::SubProbability(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw ContractViolation("SubProbability: needs at least one entry");
  mass_ = checked_sum(weights_, "SubProbability");
  if (mass_ > 1.0 + kFiniteMassTol) {
    std::ostringstream os;
    os << "SubProbability: mass " << mass_ << " exceeds 1";
    throw ContractViolation(os.str());
  }
}

std::optional<FiniteDistribution> SubProbability::normalized() const {
  if (mass_ < kNormalizerFloor) return std::nullopt;
  std::vector<double> v(weights_.begin(), weights_.end());
  for (double& x : v) x /= mass_;
  return FiniteDistribution(std::move(v));
}

double tv_distance(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) {
    throw ContractViolation("tv_distance: dimension mismatch");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) d += std::fabs(p[i] - q[i]);
  return d;
}

double tv_distance(const GridDensity& p, const GridDensity& q) {
  if (p.cells() != q.cells() || p.lo() != q.lo() || p.hi() != q.hi()) {
    throw ContractViolation("tv_distance: grid domain mismatch");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < p.cells(); ++i) d += std::fabs(p.values()[i] - q.values()[i]);
  return d * p.cell_width();
}

double hilbert_metric(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) {
    throw ContractViolation("hilbert_metric: dimension mismatch");
  }
  double max_pq = 0.0;  // sup dp/dq over the common support
  double max_qp = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool pp = p[i] > 0.0;
    const bool qp = q[i] > 0.0;
    if (pp != qp) return std::numeric_limits<double>::infinity();
    if (!pp) continue;
    max_pq = std::max(max_pq, p[i] / q[i]);
    max_qp = std::max(max_qp, q[i] / p[i]);
  }
  return std::log(max_pq * max_qp);
}

bool is_absolutely_continuous(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (p.size() != q.size()) {
    throw ContractViolation("is_absolutely_continuous: dimension mismatch");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0 && p[i] != 0.0) return false;
  }
  return true;
}

std::vector<double> radon_nikodym(const FiniteDistribution& p, const FiniteDistribution& q) {
  if (!is_absolutely_continuous(p, q)) {
    throw AbsoluteContinuityError("radon_nikodym: p is not absolutely continuous w.r.t. q");
  }
  std::vector<double> r(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] > 0.0) r[i] = p[i] / q[i];
  }
  return r;
}

}  // namespace filterstab
