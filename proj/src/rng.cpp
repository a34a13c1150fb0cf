#include "filterstab/rng.hpp"

#include "filterstab/math_util.hpp"

namespace filterstab {

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::uint64_t CounterRng::bits(std::uint64_t step, std::uint64_t draw) const {
  constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t h = mix64(seed + kGolden);
  h = mix64(h ^ (step + kGolden));
  h = mix64(h ^ (draw + kGolden));
  return h;
}

double CounterRng::uniform(std::uint64_t step, std::uint64_t draw) const {
  // 53 mantissa bits, offset by half a step: strictly inside (0,1).
  return (static_cast<double>(bits(step, draw) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t step, std::uint64_t draw) const {
  return normal_quantile(uniform(step, draw));
}

}  // namespace filterstab
