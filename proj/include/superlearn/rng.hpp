#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace superlearn {

namespace detail {
// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}  // namespace detail

/// Identifies what a random stream is used for. Values are part of the
/// reproducibility contract: changing them changes every derived draw.
enum class StreamTag : std::uint32_t {
  folds = 1,
  learner = 2,
  fold = 3,
  refit = 4,
  sim_rep = 5,
  sim_train = 6,
  sim_test = 7,
  sim_fit = 8,
  bench_dataset = 9,
  bench_outer = 10,
  bench_fit = 11,
  sample_size = 12,
  test = 99,
};

/**
 * Counter-based random stream addressed by (master seed, path).
 *
 * The key is a hash of the seed and every (tag, index) element of the path.
 * Draw j is mix64(key + (j + 1) * golden), so streams can be created in any
 * order, on any thread, and still produce the same values. Children are
 * derived by extending the path, never by consuming draws from the parent.
 */
class RngStream {
 public:
  using PathElement = std::pair<std::uint32_t, std::uint64_t>;

  explicit RngStream(std::uint64_t master_seed = 0) : master_seed_(master_seed) { rekey(); }

  RngStream child(StreamTag tag, std::uint64_t index) const {
    RngStream out = *this;
    out.path_.emplace_back(static_cast<std::uint32_t>(tag), index);
    out.rekey();
    return out;
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::vector<PathElement>& path() const noexcept { return path_; }
  std::uint64_t key() const noexcept { return key_; }

 private:
  void rekey() {
    std::uint64_t k = detail::mix64(master_seed_ ^ 0x5ca1ab1e0ddba11ULL);
    for (const auto& [tag, index] : path_) {
      k = detail::mix64(k + detail::kGolden * (std::uint64_t{tag} + 1));
      k = detail::mix64(k ^ detail::mix64(index + detail::kGolden));
    }
    key_ = k;
  }

  std::uint64_t master_seed_;
  std::vector<PathElement> path_;
  std::uint64_t key_ = 0;
};

/// Sequential reader over an RngStream. Satisfies UniformRandomBitGenerator,
/// but the helper draws below avoid std distributions, whose output is not
/// specified across standard libraries.
class RandomGenerator {
 public:
  using result_type = std::uint64_t;

  explicit RandomGenerator(const RngStream& stream) : key_(stream.key()) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, bound), bound >= 1 (rejection, unbiased).
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = (*this)();
      if (r >= threshold) return r % bound;
    }
  }

  /// Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  template <typename T>
  void shuffle(std::vector<T>& values) noexcept {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  std::uint64_t draws() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace superlearn
