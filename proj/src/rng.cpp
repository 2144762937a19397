#include "salab/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace salab {

void RngStream::derive_identity() {
  uint64_t h = detail::splitmix64(seed_);
  for (uint64_t p : path_) {
    h = detail::splitmix64(h ^ detail::splitmix64(p));
  }
  const uint64_t key64 = detail::splitmix64(h ^ 0x243F6A8885A308D3ULL);
  const uint64_t sid64 = detail::splitmix64(h ^ 0x13198A2E03707344ULL);
  key_[0] = static_cast<uint32_t>(key64);
  key_[1] = static_cast<uint32_t>(key64 >> 32);
  sid_[0] = static_cast<uint32_t>(sid64);
  sid_[1] = static_cast<uint32_t>(sid64 >> 32);
}

double RngStream::standard_normal() {
  const double u1 = uniform_open01();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::sample_gamma(double shape) {
  if (!(shape > 0.0)) {
    throw std::invalid_argument("sample_gamma: shape must be positive");
  }
  if (shape < 1.0) {
    // Boost to shape+1 and scale back: Gamma(a) = Gamma(a+1) * U^(1/a).
    const double g = sample_gamma(shape + 1.0);
    const double u = uniform_open01();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = standard_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open01();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> RngStream::sample_dirichlet(
    std::span<const double> concentration) {
  if (concentration.empty()) {
    throw std::invalid_argument("sample_dirichlet: empty concentration");
  }
  for (double a : concentration) {
    if (!(a > 0.0)) {
      throw std::invalid_argument(
          "sample_dirichlet: concentration entries must be positive");
    }
  }
  std::vector<double> out(concentration.size());
  double sum = 0.0;
  for (size_t i = 0; i < concentration.size(); ++i) {
    out[i] = sample_gamma(concentration[i]);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

int RngStream::sample_categorical(std::span<const double> probs) {
  if (probs.empty()) {
    throw std::invalid_argument("sample_categorical: empty probability vector");
  }
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) {
      throw std::invalid_argument("sample_categorical: negative probability");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "sample_categorical: probabilities must sum to 1 (got " +
        std::to_string(sum) + ")");
  }
  const double u = uniform01();
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Roundoff in the cumulative sum: fall back to the last positive entry.
  for (size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace salab
