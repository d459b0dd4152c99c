#include "citeforge/prng.hpp"

#include <limits>
#include <stdexcept>

namespace citeforge {

std::size_t DeterministicRng::below(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("DeterministicRng::below: bound must be positive");
  const auto b = static_cast<std::uint64_t>(bound);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % b);
}

}  // namespace citeforge
