#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace citeforge {

/// Seeded generator with a platform-independent bounded draw.
/// std::mt19937_64's output sequence is fixed by the standard, but the
/// standard distributions are not, so bounded draws use rejection sampling.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). `bound` must be positive.
  std::size_t below(std::size_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace citeforge
