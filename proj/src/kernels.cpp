#include "filterstab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "filterstab/errors.hpp"
#include "filterstab/math_util.hpp"

namespace filterstab {

StochasticMatrix::StochasticMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (rows_ == 0 || cols_ == 0) {
    throw ContractViolation("StochasticMatrix: empty shape");
  }
  if (entries_.size() != rows_ * cols_) {
    throw ContractViolation("StochasticMatrix: entry count does not match shape");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) {
      const double v = entries_[i * cols_ + j];
      if (!(v >= 0.0)) {
        std::ostringstream os;
        os << "StochasticMatrix: entry (" << i << "," << j << ") is negative or NaN";
        throw ContractViolation(os.str());
      }
      sum += v;
    }
    if (std::fabs(sum - 1.0) > kFiniteMassTol) {
      std::ostringstream os;
      os << "StochasticMatrix: row " << i << " sums to " << sum << " (defect "
         << std::fabs(sum - 1.0) << " exceeds " << kFiniteMassTol << ")";
      throw ContractViolation(os.str());
    }
  }
}

StochasticMatrix StochasticMatrix::identity(std::size_t n) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) e[i * n + i] = 1.0;
  return StochasticMatrix(n, n, std::move(e));
}

double dobrushin_finite(const StochasticMatrix& k) {
  if (k.rows() == 1) return 1.0;
  double coeff = 1.0;
  for (std::size_t i = 0; i + 1 < k.rows(); ++i) {
    for (std::size_t j = i + 1; j < k.rows(); ++j) {
      double overlap = 0.0;
      for (std::size_t c = 0; c < k.cols(); ++c) {
        overlap += std::min(k(i, c), k(j, c));
      }
      coeff = std::min(coeff, overlap);
    }
  }
  return coeff;
}

std::optional<MixingCertificate> mixing_coefficient(const StochasticMatrix& k) {
  // A column that is partially zero rules out any dominating measure: lambda_j
  // must be zero (upper bound at the zero entry) and nonzero (lower bound at
  // the positive entry) at once.
  for (std::size_t j = 0; j < k.cols(); ++j) {
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < k.rows(); ++i) {
      if (k(i, j) == 0.0) ++zeros;
    }
    if (zeros != 0 && zeros != k.rows()) return std::nullopt;
  }
  MixingCertificate cert;
  cert.lambda.assign(k.cols(), 0.0);
  for (std::size_t j = 0; j < k.cols(); ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < k.rows(); ++i) sum += k(i, j);
    cert.lambda[j] = sum / static_cast<double>(k.rows());
  }
  cert.epsilon = 1.0;
  for (std::size_t j = 0; j < k.cols(); ++j) {
    if (cert.lambda[j] == 0.0) continue;
    for (std::size_t i = 0; i < k.rows(); ++i) {
      const double r = k(i, j) / cert.lambda[j];
      cert.epsilon = std::min({cert.epsilon, r, 1.0 / r});
    }
  }
  return cert;
}

FiniteDistribution apply_kernel(const StochasticMatrix& k, const FiniteDistribution& p) {
  if (k.rows() != p.size()) {
    throw ContractViolation("apply_kernel: kernel rows must match distribution length");
  }
  std::vector<double> out(k.cols(), 0.0);
  for (std::size_t i = 0; i < k.rows(); ++i) {
    const double pi = p[i];
    if (pi == 0.0) continue;
    for (std::size_t j = 0; j < k.cols(); ++j) out[j] += pi * k(i, j);
  }
  return FiniteDistribution(std::move(out));
}

// ---------------------------------------------------------------------------
// Mean functions
// ---------------------------------------------------------------------------

namespace {

struct EvalVisitor {
  double x;

  double operator()(const AffineClipped& f) const {
    return std::clamp(f.a * x + f.b, -f.clip, f.clip);
  }
  double operator()(const Sine& f) const {
    return f.amplitude * std::sin(f.frequency * x + f.phase);
  }
  double operator()(const TanhScaled& f) const { return f.scale * std::tanh(f.gain * x); }
  double operator()(const TableLinear& f) const {
    if (x <= f.x.front()) return f.y.front();
    if (x >= f.x.back()) return f.y.back();
    const auto it = std::upper_bound(f.x.begin(), f.x.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - f.x.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - f.x[lo]) / (f.x[hi] - f.x[lo]);
    return f.y[lo] + w * (f.y[hi] - f.y[lo]);
  }
};

struct BoundVisitor {
  double operator()(const AffineClipped& f) const {
    if (f.a == 0.0) return std::min(std::fabs(f.b), f.clip);
    return f.clip;
  }
  double operator()(const Sine& f) const {
    if (f.frequency == 0.0) return std::fabs(f.amplitude * std::sin(f.phase));
    return std::fabs(f.amplitude);
  }
  double operator()(const TanhScaled& f) const {
    return f.gain == 0.0 ? 0.0 : std::fabs(f.scale);
  }
  double operator()(const TableLinear& f) const {
    double m = 0.0;
    for (double v : f.y) m = std::max(m, std::fabs(v));
    return m;
  }
};

struct ValidateVisitor {
  void operator()(const AffineClipped& f) const {
    if (!(f.clip >= 0.0) || !std::isfinite(f.a) || !std::isfinite(f.b)) {
      throw ContractViolation("MeanFunction: affine needs finite a,b and clip >= 0");
    }
  }
  void operator()(const Sine& f) const {
    if (!std::isfinite(f.amplitude) || !std::isfinite(f.frequency) || !std::isfinite(f.phase)) {
      throw ContractViolation("MeanFunction: sine parameters must be finite");
    }
  }
  void operator()(const TanhScaled& f) const {
    if (!std::isfinite(f.scale) || !std::isfinite(f.gain)) {
      throw ContractViolation("MeanFunction: tanh parameters must be finite");
    }
  }
  void operator()(const TableLinear& f) const {
    if (f.x.size() < 2 || f.x.size() != f.y.size()) {
      throw ContractViolation("MeanFunction: table needs >= 2 knots with matching x/y");
    }
    for (std::size_t i = 0; i < f.x.size(); ++i) {
      if (!std::isfinite(f.x[i]) || !std::isfinite(f.y[i])) {
        throw ContractViolation("MeanFunction: table values must be finite");
      }
      if (i > 0 && !(f.x[i - 1] < f.x[i])) {
        throw ContractViolation("MeanFunction: table knots must be strictly increasing");
      }
    }
  }
};

}  // namespace

MeanFunction::MeanFunction(Spec spec) : spec_(std::move(spec)) {
  std::visit(ValidateVisitor{}, spec_);
}

double MeanFunction::operator()(double x) const { return std::visit(EvalVisitor{x}, spec_); }

double MeanFunction::sup_bound() const { return std::visit(BoundVisitor{}, spec_); }

// ---------------------------------------------------------------------------
// Additive-Gaussian kernel
// ---------------------------------------------------------------------------

namespace {

void spot_check_bound(const MeanFunction& f, double bound) {
  // The analytic bound is exact for every family member; the sweep guards
  // against a family evaluator and its bound drifting apart.
  constexpr int kSamples = 2048;
  double span_lo = -1e3;
  double span_hi = 1e3;
  if (const auto* table = std::get_if<TableLinear>(&f.spec())) {
    span_lo = std::min(span_lo, table->x.front() - 1.0);
    span_hi = std::max(span_hi, table->x.back() + 1.0);
  }
  for (int i = 0; i <= kSamples; ++i) {
    const double x = span_lo + (span_hi - span_lo) * i / kSamples;
    if (std::fabs(f(x)) > bound + 1e-12) {
      throw ContractViolation("Gaussian1DKernel: mean function exceeds its certified bound");
    }
  }
}

}  // namespace

Gaussian1DKernel::Gaussian1DKernel(MeanFunction mean_fn, double sigma)
    : Gaussian1DKernel(std::move(mean_fn), sigma, -1.0) {}

Gaussian1DKernel::Gaussian1DKernel(MeanFunction mean_fn, double sigma, double bound)
    : mean_fn_(std::move(mean_fn)), sigma_(sigma), bound_(bound) {
  if (!(sigma_ > 0.0)) {
    throw ContractViolation("Gaussian1DKernel: sigma must be positive");
  }
  const double analytic = mean_fn_.sup_bound();
  if (bound_ < 0.0) {
    bound_ = analytic;
  } else if (bound_ + 1e-12 < analytic) {
    std::ostringstream os;
    os << "Gaussian1DKernel: declared bound " << bound_
       << " is below the mean function's sup norm " << analytic;
    throw ContractViolation(os.str());
  }
  spot_check_bound(mean_fn_, bound_);
}

double Gaussian1DKernel::density(double to, double from) const {
  return normal_pdf(to, mean_fn_(from), sigma_);
}

double dobrushin_gaussian_analytic(const Gaussian1DKernel& k) {
  return 2.0 * normal_cdf(-k.bound() / k.sigma());
}

double dobrushin_overlap_numeric(const Gaussian1DKernel& k, std::size_t quad_points) {
  if (quad_points < 1000) {
    throw ContractViolation("dobrushin_overlap_numeric: need at least 1000 quadrature points");
  }
  // Even interval count puts a node exactly on the crossing point x = 0,
  // keeping the composite rule O(h^2) despite the kink of the min.
  std::size_t n = quad_points + (quad_points % 2);
  const double b = k.bound();
  const double s = k.sigma();
  const double lo = -b - 8.0 * s;
  const double hi = b + 8.0 * s;
  const double h = (hi - lo) / static_cast<double>(n);
  auto f = [&](double x) {
    return std::min(normal_pdf(x, b, s), normal_pdf(x, -b, s));
  };
  double acc = 0.5 * (f(lo) + f(hi));
  for (std::size_t i = 1; i < n; ++i) acc += f(lo + h * static_cast<double>(i));
  return acc * h;
}

// ---------------------------------------------------------------------------
// Grid discretization
// ---------------------------------------------------------------------------

namespace {

void check_grid(const GridSpec& g) {
  if (!(g.lo < g.hi) || g.cells < 2) {
    throw ContractViolation("GridSpec: needs lo < hi and at least two cells");
  }
}

GridDensity finish_pushforward(std::vector<double> out, const GridSpec& grid,
                               double* mass_defect) {
  const double h = grid.cell_width();
  double mass = 0.0;
  for (double v : out) mass += v;
  mass *= h;
  const double defect = std::fabs(1.0 - mass);
  if (mass_defect != nullptr) *mass_defect = defect;
  if (defect > kTruncationDefectLimit) {
    std::ostringstream os;
    os << "grid pushforward lost mass " << defect << " past the grid boundary (limit "
       << kTruncationDefectLimit << "); widen the output grid";
    throw TruncationError(os.str());
  }
  for (double& v : out) v /= mass;
  return GridDensity(grid.lo, grid.hi, std::move(out));
}

}  // namespace

Pushforward apply_gaussian_kernel(const Gaussian1DKernel& k, const GridDensity& d,
                                  const GridSpec& out_grid) {
  check_grid(out_grid);
  const double h_in = d.cell_width();
  std::vector<double> out(out_grid.cells, 0.0);
  for (std::size_t i = 0; i < d.cells(); ++i) {
    const double w = d.values()[i] * h_in;
    if (w == 0.0) continue;
    const double m = k.mean(d.cell_center(i));
    for (std::size_t j = 0; j < out_grid.cells; ++j) {
      out[j] += w * normal_pdf(out_grid.cell_center(j), m, k.sigma());
    }
  }
  double defect = 0.0;
  GridDensity density = finish_pushforward(std::move(out), out_grid, &defect);
  return Pushforward{std::move(density), defect};
}

GridTransition::GridTransition(const Gaussian1DKernel& k, const GridSpec& grid) : grid_(grid) {
  check_grid(grid_);
  const double h = grid_.cell_width();
  weights_.resize(grid_.cells * grid_.cells);
  for (std::size_t i = 0; i < grid_.cells; ++i) {
    const double m = k.mean(grid_.cell_center(i));
    for (std::size_t j = 0; j < grid_.cells; ++j) {
      weights_[i * grid_.cells + j] = h * normal_pdf(grid_.cell_center(j), m, k.sigma());
    }
  }
}

GridDensity GridTransition::apply(const GridDensity& d, double* mass_defect) const {
  if (d.cells() != grid_.cells || d.lo() != grid_.lo || d.hi() != grid_.hi) {
    throw ContractViolation("GridTransition: density grid does not match");
  }
  std::vector<double> out(grid_.cells, 0.0);
  for (std::size_t i = 0; i < grid_.cells; ++i) {
    const double di = d.values()[i];
    if (di == 0.0) continue;
    const double* row = weights_.data() + i * grid_.cells;
    for (std::size_t j = 0; j < grid_.cells; ++j) out[j] += di * row[j];
  }
  return finish_pushforward(std::move(out), grid_, mass_defect);
}

}  // namespace filterstab
