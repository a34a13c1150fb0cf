#ifndef FILTERSTAB_KERNELS_HPP
#define FILTERSTAB_KERNELS_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "filterstab/measures.hpp"

namespace filterstab {

// Row-stochastic matrix: row i is the conditional distribution given state i.
// Rows must sum to 1 within 1e-12 and are stored exactly as given.
class StochasticMatrix {
 public:
  StochasticMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static StochasticMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(entries_).subspan(i * cols_, cols_);
  }
  std::span<const double> entries() const { return entries_; }

  bool operator==(const StochasticMatrix&) const = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> entries_;
};

// Dobrushin ergodicity coefficient of a finite kernel: the minimum over row
// pairs of the summed elementwise minima. Always in [0,1]; 1 for a single row.
double dobrushin_finite(const StochasticMatrix& k);

// Witness that a kernel is mixing: eps * lambda(j) <= K(i,j) <= lambda(j)/eps
// for every row i and column j.
struct MixingCertificate {
  double epsilon = 0.0;
  std::vector<double> lambda;
};

// Mixing check with the column-mean dominating measure. Returns nullopt when
// some column has both zero and nonzero entries (then no lambda works);
// otherwise the largest eps valid for the canonical lambda, so the returned
// eps is a certified lower bound on the best mixing coefficient.
std::optional<MixingCertificate> mixing_coefficient(const StochasticMatrix& k);

// Pushforward of a distribution through the kernel: (pK)_j = sum_i p_i K_ij.
FiniteDistribution apply_kernel(const StochasticMatrix& k, const FiniteDistribution& p);

// ---------------------------------------------------------------------------
// Bounded mean functions for 1-D additive-Gaussian kernels. The family is
// closed so every member carries an exact analytic sup-norm bound.
// ---------------------------------------------------------------------------

struct AffineClipped {
  double a = 0.0;
  double b = 0.0;
  double clip = 0.0;  // values saturate at [-clip, clip]
};

struct Sine {
  double amplitude = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
};

struct TanhScaled {
  double scale = 0.0;
  double gain = 0.0;
};

// Piecewise-linear interpolation through (x[i], y[i]) with constant
// extrapolation outside the knot range. Knots strictly increasing.
struct TableLinear {
  std::vector<double> x;
  std::vector<double> y;
};

class MeanFunction {
 public:
  using Spec = std::variant<AffineClipped, Sine, TanhScaled, TableLinear>;

  explicit MeanFunction(Spec spec);

  double operator()(double x) const;
  // Exact sup-norm bound of the function over the reals.
  double sup_bound() const;
  const Spec& spec() const { return spec_; }

 private:
  Spec spec_;
};

// Kernel x -> N(mean_fn(x), sigma^2) with a certified bound on |mean_fn|.
// The bound may be looser than the analytic one (never tighter); it is
// spot-checked against the function on a dense grid at construction.
class Gaussian1DKernel {
 public:
  Gaussian1DKernel(MeanFunction mean_fn, double sigma);
  Gaussian1DKernel(MeanFunction mean_fn, double sigma, double bound);

  double sigma() const { return sigma_; }
  double bound() const { return bound_; }
  const MeanFunction& mean_fn() const { return mean_fn_; }
  double mean(double x) const { return mean_fn_(x); }
  double density(double to, double from) const;

 private:
  MeanFunction mean_fn_;
  double sigma_;
  double bound_;
};

// delta(K) = 2 Phi(-bound/sigma): the minimal overlap of two conditionals,
// attained at the extreme mean pair (+bound, -bound). A certified lower bound
// when |mean_fn| does not attain the bound, exact when it does.
double dobrushin_gaussian_analytic(const Gaussian1DKernel& k);

// Composite-trapezoid quadrature of the overlap integral
// int min(N(x; +bound, s^2), N(x; -bound, s^2)) dx over the +-8 sigma range.
// quad_points (>= 1000) is the number of subintervals.
double dobrushin_overlap_numeric(const Gaussian1DKernel& k, std::size_t quad_points);

// Uniform 1-D grid description used for discretized continuous filtering.
struct GridSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t cells = 0;

  double cell_width() const { return (hi - lo) / static_cast<double>(cells); }
  double cell_center(std::size_t i) const {
    return lo + (static_cast<double>(i) + 0.5) * cell_width();
  }
};

struct Pushforward {
  GridDensity density;
  double mass_defect = 0.0;  // |1 - mass| measured before renormalization
};

// Pushforward of a grid density through an additive-Gaussian kernel onto
// out_grid by midpoint quadrature over source cells. The result is
// renormalized; a pre-normalization defect above 1e-3 raises TruncationError.
Pushforward apply_gaussian_kernel(const Gaussian1DKernel& k, const GridDensity& d,
                                  const GridSpec& out_grid);

// Discretization of an additive-Gaussian kernel reused across filter steps:
// row i holds the cell masses of N(mean_fn(center_i), sigma^2) on the grid.
class GridTransition {
 public:
  GridTransition(const Gaussian1DKernel& k, const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  // One prediction step; defect (|1-mass| before renormalization) is written
  // to *mass_defect when non-null. Defect > 1e-3 raises TruncationError.
  GridDensity apply(const GridDensity& d, double* mass_defect = nullptr) const;

 private:
  GridSpec grid_;
  std::vector<double> weights_;  // row-major cells x cells
};

inline constexpr double kTruncationDefectLimit = 1e-3;

}  // namespace filterstab

#endif  // FILTERSTAB_KERNELS_HPP
