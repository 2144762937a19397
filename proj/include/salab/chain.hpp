#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "salab/errors.hpp"
#include "salab/operators.hpp"
#include "salab/rng.hpp"

namespace salab {

/// Iterates are recorded every `record_stride` steps, starting with the
/// initial point, so the stored length is floor(total_steps/stride) + 1.
struct Trajectory {
  double alpha = 0.0;
  int dim = 0;
  int64_t total_steps = 0;
  int64_t record_stride = 1;
  std::string tag;
  std::vector<double> data;  // (n_recorded x dim) row-major

  int64_t n_recorded() const { return int64_t(data.size()) / dim; }
  std::span<const double> at(int64_t i) const {
    return {data.data() + size_t(i) * dim, size_t(dim)};
  }
  std::span<double> at(int64_t i) {
    return {data.data() + size_t(i) * dim, size_t(dim)};
  }
};

/// Iterates above this in sup norm abort the chain with DivergenceError.
inline constexpr double kDivergenceGuard = 1e9;

/// One step of theta' = theta + alpha (T(theta) - theta + w).
Vec sa_step(std::span<const double> theta, double alpha, const Operator& op,
            std::span<const double> w);

/// Iterate sa_step with fresh noise each step; record every stride-th point.
Trajectory run_chain(const Vec& theta0, double alpha, int64_t steps,
                     const Operator& op, const NoiseSampler& noise,
                     RngStream& stream, int64_t record_stride = 1);

/// Map every stored iterate to (theta - theta*) / sqrt(alpha).
Trajectory rescale(const Trajectory& traj, const Vec& theta_star);

/// CSV with header step,component_0,...,component_{d-1}; step is the raw
/// iteration index of each stored row. Full-precision floats.
std::string trajectory_csv(const Trajectory& traj);
void save_trajectory_csv(const Trajectory& traj, const std::string& path);

/// Two chains from different starts driven by the identical noise
/// realization. Returns ||theta_t^[1] - theta_t^[2]||_c^2 for t = 0..steps.
std::vector<double> coupled_shared_noise(const Vec& theta0_a,
                                         const Vec& theta0_b, double alpha,
                                         int64_t steps, const Operator& op,
                                         const NoiseSampler& noise,
                                         RngStream& stream);

/// Stepsize-ratio coupling: the alpha-chain takes one step driven by
/// (w_{kt} + ... + w_{kt+k-1})/sqrt(k) while the (alpha/k)-chain takes k
/// steps driven by the individual w's. Both start at theta*. Returns
/// ||Y_t^(alpha) - Y_{kt}^(alpha/k)||_c^2 for t = 0..steps, where Y is the
/// centered iterate scaled by 1/sqrt(stepsize). Gaussian noise only: the
/// aggregation identity fails for other laws.
std::vector<double> coupled_stepsize_ratio(double alpha, int k, int64_t steps,
                                           const Operator& op,
                                           const NoiseSampler& noise,
                                           RngStream& stream,
                                           const Vec& theta_star);

}  // namespace salab
