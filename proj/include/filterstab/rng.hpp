#ifndef FILTERSTAB_RNG_HPP
#define FILTERSTAB_RNG_HPP

#include <cstdint>

namespace filterstab {

// Stateless counter-based generator: every variate is a pure function of
// (seed, step, draw), so trials can run under any parallel schedule and still
// reproduce bit-identically.
struct CounterRng {
  std::uint64_t seed = 0;

  // Uniform variate in the open interval (0,1).
  double uniform(std::uint64_t step, std::uint64_t draw) const;
  // Standard normal variate via the quantile transform.
  double normal(std::uint64_t step, std::uint64_t draw) const;

  std::uint64_t bits(std::uint64_t step, std::uint64_t draw) const;
};

// SplitMix64 finalizer; bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t z);

}  // namespace filterstab

#endif  // FILTERSTAB_RNG_HPP
