#ifndef FILTERSTAB_MEASURES_HPP
#define FILTERSTAB_MEASURES_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace filterstab {

// Mass-defect tolerances accepted by the distribution constructors. Entries
// are stored exactly as given; a defect beyond the tolerance is rejected as a
// contract violation.
inline constexpr double kFiniteMassTol = 1e-12;
inline constexpr double kGridMassTol = 1e-9;

// Normalizing constants below this floor are treated as exactly zero
// (denormal-range underflow guard for Bayes updates).
inline constexpr double kNormalizerFloor = 1e-300;

// Probability vector over a finite alphabet. Immutable after construction;
// entries are >= 0 and sum to 1 within 1e-12.
class FiniteDistribution {
 public:
  explicit FiniteDistribution(std::vector<double> probs);

  static FiniteDistribution uniform(std::size_t n);
  static FiniteDistribution point_mass(std::size_t i, std::size_t n);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }

  bool operator==(const FiniteDistribution&) const = default;

 private:
  std::vector<double> probs_;
};

// Piecewise-constant probability density on a uniform 1-D grid. `values[i]`
// is the density height on cell i; sum(values) * cell_width == 1 within 1e-9.
class GridDensity {
 public:
  GridDensity(double lo, double hi, std::vector<double> values);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t cells() const { return values_.size(); }
  double cell_width() const { return (hi_ - lo_) / static_cast<double>(values_.size()); }
  double cell_center(std::size_t i) const {
    return lo_ + (static_cast<double>(i) + 0.5) * cell_width();
  }
  std::span<const double> values() const { return values_; }

  bool operator==(const GridDensity&) const = default;

 private:
  double lo_;
  double hi_;
  std::vector<double> values_;
};

// Finite nonnegative weight vector with total mass in [0,1]; the carrier of
// un-normalized Bayes updates before the normalizer is applied.
class SubProbability {
 public:
  explicit SubProbability(std::vector<double> weights);

  double mass() const { return mass_; }
  std::span<const double> weights() const { return weights_; }

  // Normalized distribution, or nullopt when the mass is (numerically) zero.
  std::optional<FiniteDistribution> normalized() const;

 private:
  std::vector<double> weights_;
  double mass_;
};

// Total variation distance, sup_{|f|<=1} |int f dp - int f dq|, which for the
// representations here is the plain l1 distance (range [0,2]).
double tv_distance(const FiniteDistribution& p, const FiniteDistribution& q);
double tv_distance(const GridDensity& p, const GridDensity& q);

// Hilbert projective metric. Finite vectors are comparable exactly when their
// supports coincide; otherwise the distance is +infinity.
double hilbert_metric(const FiniteDistribution& p, const FiniteDistribution& q);

// true iff q(i) == 0 implies p(i) == 0 for every i (p << q).
bool is_absolutely_continuous(const FiniteDistribution& p, const FiniteDistribution& q);

// dp/dq where defined, 0 off the support of q. Requires p << q.
std::vector<double> radon_nikodym(const FiniteDistribution& p, const FiniteDistribution& q);

}  // namespace filterstab

#endif  // FILTERSTAB_MEASURES_HPP
