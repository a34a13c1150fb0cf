#ifndef FILTERSTAB_MATH_UTIL_HPP
#define FILTERSTAB_MATH_UTIL_HPP

namespace filterstab {

// Standard normal cdf, evaluated through the complementary error function.
// Absolute error is below 1e-15 over the whole real line.
double normal_cdf(double x);

// Inverse of normal_cdf for p in (0,1) (Wichura's PPND16 rational
// approximation, relative error ~1e-15). Out-of-range p -> contract violation.
double normal_quantile(double p);

// Density of N(mean, sigma^2) at x. Requires sigma > 0.
double normal_pdf(double x, double mean, double sigma);

}  // namespace filterstab

#endif  // FILTERSTAB_MATH_UTIL_HPP
