#include "salab/chain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace salab {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("stepsize must lie in (0,1)");
  }
}

void step_inplace(Vec& theta, Vec& t_of_theta, double alpha,
                  const Operator& op, std::span<const double> w) {
  op.apply(theta, t_of_theta);
  for (size_t i = 0; i < theta.size(); ++i) {
    theta[i] += alpha * (t_of_theta[i] - theta[i] + w[i]);
  }
}

void guard(const Vec& theta, int64_t step) {
  for (double v : theta) {
    if (!(std::abs(v) <= kDivergenceGuard)) {
      throw DivergenceError(step, "chain diverged at step " +
                                      std::to_string(step));
    }
  }
}

}  // namespace

Vec sa_step(std::span<const double> theta, double alpha, const Operator& op,
            std::span<const double> w) {
  check_alpha(alpha);
  if (int(theta.size()) != op.dim() || int(w.size()) != op.dim()) {
    throw std::invalid_argument("sa_step: dimension mismatch");
  }
  Vec out(theta.begin(), theta.end());
  Vec t(op.dim());
  step_inplace(out, t, alpha, op, w);
  return out;
}

Trajectory run_chain(const Vec& theta0, double alpha, int64_t steps,
                     const Operator& op, const NoiseSampler& noise,
                     RngStream& stream, int64_t record_stride) {
  check_alpha(alpha);
  if (steps < 1) throw std::invalid_argument("run_chain: steps must be >= 1");
  if (record_stride < 1) {
    throw std::invalid_argument("run_chain: record_stride must be >= 1");
  }
  if (int(theta0.size()) != op.dim() || noise.dim() != op.dim()) {
    throw std::invalid_argument("run_chain: dimension mismatch");
  }
  const int d = op.dim();
  Trajectory traj;
  traj.alpha = alpha;
  traj.dim = d;
  traj.total_steps = steps;
  traj.record_stride = record_stride;
  traj.data.reserve(size_t(steps / record_stride + 1) * d);

  Vec theta = theta0;
  Vec t(d), w(d);
  traj.data.insert(traj.data.end(), theta.begin(), theta.end());
  for (int64_t s = 1; s <= steps; ++s) {
    noise.draw(stream, w);
    step_inplace(theta, t, alpha, op, w);
    guard(theta, s);
    if (s % record_stride == 0) {
      traj.data.insert(traj.data.end(), theta.begin(), theta.end());
    }
  }
  return traj;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream os;
  os << "step";
  for (int j = 0; j < traj.dim; ++j) os << ",component_" << j;
  os << '\n';
  const int64_t n = traj.n_recorded();
  for (int64_t i = 0; i < n; ++i) {
    os << i * traj.record_stride;
    const auto row = traj.at(i);
    for (int j = 0; j < traj.dim; ++j) os << ',' << format_full(row[j]);
    os << '\n';
  }
  return os.str();
}

void save_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_trajectory_csv: cannot open " + path);
  f << trajectory_csv(traj);
  if (!f) throw IoError("save_trajectory_csv: write failed on " + path);
}

Trajectory rescale(const Trajectory& traj, const Vec& theta_star) {
  if (int(theta_star.size()) != traj.dim) {
    throw std::invalid_argument("rescale: theta* dimension mismatch");
  }
  Trajectory out = traj;
  const double root = std::sqrt(traj.alpha);
  const int64_t n = traj.n_recorded();
  for (int64_t i = 0; i < n; ++i) {
    auto row = out.at(i);
    for (int j = 0; j < traj.dim; ++j) {
      row[j] = (row[j] - theta_star[j]) / root;
    }
  }
  return out;
}

std::vector<double> coupled_shared_noise(const Vec& theta0_a,
                                         const Vec& theta0_b, double alpha,
                                         int64_t steps, const Operator& op,
                                         const NoiseSampler& noise,
                                         RngStream& stream) {
  check_alpha(alpha);
  if (int(theta0_a.size()) != op.dim() || int(theta0_b.size()) != op.dim()) {
    throw std::invalid_argument("coupled_shared_noise: dimension mismatch");
  }
  const int d = op.dim();
  Vec a = theta0_a, b = theta0_b;
  Vec t(d), w(d);
  std::vector<double> sq(size_t(steps) + 1);
  const double d0 = dist_of(op.norm(), a, b);
  sq[0] = d0 * d0;
  for (int64_t s = 1; s <= steps; ++s) {
    noise.draw(stream, w);
    step_inplace(a, t, alpha, op, w);
    step_inplace(b, t, alpha, op, w);
    guard(a, s);
    guard(b, s);
    const double dist = dist_of(op.norm(), a, b);
    sq[size_t(s)] = dist * dist;
  }
  return sq;
}

std::vector<double> coupled_stepsize_ratio(double alpha, int k, int64_t steps,
                                           const Operator& op,
                                           const NoiseSampler& noise,
                                           RngStream& stream,
                                           const Vec& theta_star) {
  check_alpha(alpha);
  if (k < 1) throw std::invalid_argument("coupled_stepsize_ratio: k must be >= 1");
  if (noise.kind() != NoiseKind::Gaussian) {
    throw UnsupportedError(
        "coupled_stepsize_ratio: requires Gaussian noise (the aggregated "
        "noise (w_1 + ... + w_k)/sqrt(k) must match the one-step law)");
  }
  if (int(theta_star.size()) != op.dim() || noise.dim() != op.dim()) {
    throw std::invalid_argument("coupled_stepsize_ratio: dimension mismatch");
  }
  const int d = op.dim();
  const double alpha_fast = alpha / k;
  const double root_slow = std::sqrt(alpha);
  const double root_fast = std::sqrt(alpha_fast);
  const double root_k = std::sqrt(double(k));

  Vec slow = theta_star, fast = theta_star;
  Vec t(d), w(d), agg(d);
  Vec y_slow(d), y_fast(d);
  std::vector<double> sq(size_t(steps) + 1);
  sq[0] = 0.0;
  for (int64_t s = 1; s <= steps; ++s) {
    std::fill(agg.begin(), agg.end(), 0.0);
    for (int j = 0; j < k; ++j) {
      noise.draw(stream, w);
      for (int i = 0; i < d; ++i) agg[i] += w[i];
      step_inplace(fast, t, alpha_fast, op, w);
    }
    for (int i = 0; i < d; ++i) agg[i] /= root_k;
    step_inplace(slow, t, alpha, op, agg);
    guard(slow, s);
    guard(fast, s);
    for (int i = 0; i < d; ++i) {
      y_slow[i] = (slow[i] - theta_star[i]) / root_slow;
      y_fast[i] = (fast[i] - theta_star[i]) / root_fast;
    }
    const double dist = dist_of(op.norm(), y_slow, y_fast);
    sq[size_t(s)] = dist * dist;
  }
  return sq;
}

}  // namespace salab
