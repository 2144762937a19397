#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace salab {

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct PhiloxBlock {
  uint32_t v[4];
};

// Philox4x32-10 (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
inline PhiloxBlock philox4x32(uint32_t k0, uint32_t k1, uint32_t c0,
                              uint32_t c1, uint32_t c2, uint32_t c3) {
  constexpr uint32_t kMul0 = 0xD2511F53u;
  constexpr uint32_t kMul1 = 0xCD9E8D57u;
  constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = static_cast<uint64_t>(kMul0) * c0;
    const uint64_t p1 = static_cast<uint64_t>(kMul1) * c2;
    const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
    const uint32_t lo0 = static_cast<uint32_t>(p0);
    const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
    const uint32_t lo1 = static_cast<uint32_t>(p1);
    const uint32_t n0 = hi1 ^ c1 ^ k0;
    const uint32_t n1 = lo1;
    const uint32_t n2 = hi0 ^ c3 ^ k1;
    const uint32_t n3 = lo0;
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return PhiloxBlock{{c0, c1, c2, c3}};
}

}  // namespace detail

/// Counter-based random stream: every output is a pure function of
/// (seed, path, counter), so a stream can be replayed or handed to a worker
/// without shared state. Splitting appends a key to the path and yields a
/// statistically independent child stream; children never depend on the
/// order in which siblings are drawn from.
///
/// Core generator is Philox4x32-10. One uniform draw consumes one 64-bit
/// lane; the draw counter indexes lanes directly, so draw i is always the
/// same number for a given (seed, path).
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : seed_(seed) { derive_identity(); }

  RngStream(uint64_t seed, std::vector<uint64_t> path)
      : seed_(seed), path_(std::move(path)) {
    derive_identity();
  }

  /// Child stream with `key` appended to the path; counter starts at 0.
  /// Does not advance this stream.
  RngStream split(uint64_t key) const {
    std::vector<uint64_t> p = path_;
    p.push_back(key);
    return RngStream(seed_, std::move(p));
  }

  uint64_t seed() const { return seed_; }
  const std::vector<uint64_t>& path() const { return path_; }
  uint64_t counter() const { return counter_; }
  void set_counter(uint64_t c) { counter_ = c; }

  /// Raw 64-bit draw at the current counter.
  uint64_t next_u64() {
    const uint64_t i = counter_++;
    const uint64_t block = i >> 1;
    const detail::PhiloxBlock b = detail::philox4x32(
        key_[0], key_[1], static_cast<uint32_t>(block),
        static_cast<uint32_t>(block >> 32), sid_[0], sid_[1]);
    const int lane = static_cast<int>(i & 1);
    return (static_cast<uint64_t>(b.v[2 * lane + 1]) << 32) | b.v[2 * lane];
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1]; used where log(u) must stay finite.
  double uniform_open01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  /// N(0,1) via Box-Muller, z = sqrt(-2 ln u1) cos(2 pi u2). Consumes
  /// exactly two uniforms; the sine branch is discarded so the counter
  /// advance per call is fixed.
  double standard_normal();

  /// Dirichlet(concentration) draw; entries >= 0, sum 1.
  /// Throws std::invalid_argument on a non-positive concentration entry.
  std::vector<double> sample_dirichlet(std::span<const double> concentration);

  /// Index i with probability probs[i]. probs must be entrywise >= 0 and
  /// sum to 1 within 1e-9, else std::invalid_argument.
  int sample_categorical(std::span<const double> probs);

  /// Gamma(shape, 1) via Marsaglia-Tsang (rejection; variable draw count).
  double sample_gamma(double shape);

 private:
  void derive_identity();

  uint64_t seed_ = 0;
  std::vector<uint64_t> path_;
  uint64_t counter_ = 0;
  uint32_t key_[2] = {0, 0};
  uint32_t sid_[2] = {0, 0};
};

}  // namespace salab
