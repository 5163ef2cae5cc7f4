#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace diffbias {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based generator. A (seed, stream) pair names an independent
/// sequence; every draw is a pure function of (seed, stream, position), so
/// results never depend on thread layout or call interleaving elsewhere.
///
/// Normal and uniform variates are produced by explicit transforms rather
/// than <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next_u64(); }
  std::uint64_t next_u64();

  /// Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Derive a child seed from a parent seed and a tag, for composing
/// independent stochastic stages from one user-facing seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

/// Fisher-Yates shuffle driven by Rng (std::shuffle is implementation-defined).
template <class RandomIt>
void shuffle(RandomIt first, RandomIt last, Rng& rng) {
  auto n = last - first;
  for (decltype(n) i = n - 1; i > 0; --i) {
    auto j = static_cast<decltype(n)>(rng.below(static_cast<std::uint64_t>(i) + 1));
    using std::swap;
    swap(first[i], first[j]);
  }
}

}  // namespace diffbias
