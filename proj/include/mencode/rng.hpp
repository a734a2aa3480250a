#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace mencode::rng {

/// Mixes (seed, tag, index) into an independent stream seed. Used so that
/// every repeat / left-out row owns its own stream regardless of the
/// order in which work is scheduled.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index);

/// Platform-stable random stream. std::mt19937_64's output sequence is fixed
/// by the standard, the distributions in <random> are not, so bounded
/// draws are done here by rejection.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform();

 private:
  std::mt19937_64 engine_;
};

template <typename T>
void shuffle(std::span<T> items, Stream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(stream.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace mencode::rng
