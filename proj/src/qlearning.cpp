#include "salab/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace salab {

namespace {

// Global clip window for the GaussianClipped diagnostic.
void clip_bounds(const Mdp& mdp, double& lo, double& hi) {
  double rmin = mdp.r_bar[0], rmax = mdp.r_bar[0];
  for (double r : mdp.r_bar) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  lo = rmin - 5.0 * mdp.reward_noise_std;
  hi = rmax + 5.0 * mdp.reward_noise_std;
}

double draw_reward(RngStream& stream, const Mdp& mdp, int sa,
                   RewardDist dist) {
  const double mean = mdp.r_bar[sa];
  const double sigma = mdp.reward_noise_std;
  switch (dist) {
    case RewardDist::Gaussian:
      return mean + sigma * stream.standard_normal();
    case RewardDist::UniformBounded:
      // Uniform on mean +- sqrt(3) sigma: variance sigma^2.
      return mean + sigma * std::sqrt(3.0) * (2.0 * stream.uniform01() - 1.0);
    case RewardDist::GaussianClipped: {
      double lo, hi;
      clip_bounds(mdp, lo, hi);
      return std::clamp(mean + sigma * stream.standard_normal(), lo, hi);
    }
  }
  return mean;
}

void guard_q(const Vec& q, int64_t step) {
  for (double v : q) {
    if (!(std::abs(v) <= kDivergenceGuard)) {
      throw DivergenceError(step, "q-learning chain diverged at step " +
                                      std::to_string(step));
    }
  }
}

// Synchronous sweep: every (s,a) draws its own next state and reward, all
// maxima taken over the pre-update q.
void sync_step_inplace(Vec& q, Vec& f, double alpha, const Mdp& mdp,
                       RngStream& stream, RewardDist reward) {
  f = state_max(mdp, q);
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    const int x = stream.sample_categorical(mdp.row(sa));
    const double r = draw_reward(stream, mdp, sa, reward);
    q[sa] += alpha * (mdp.gamma * f[x] - q[sa] + r);
  }
}

void async_step_inplace(Vec& q, double alpha, const Mdp& mdp,
                        RngStream& stream, RewardDist reward) {
  const int sa = stream.sample_categorical(mdp.kappa_b);
  const int x = stream.sample_categorical(mdp.row(sa));
  const double r = draw_reward(stream, mdp, sa, reward);
  double fx = q[size_t(mdp.sa_index(x, 0))];
  for (int a = 1; a < mdp.n_actions; ++a) {
    fx = std::max(fx, q[size_t(mdp.sa_index(x, a))]);
  }
  q[sa] += alpha * (mdp.gamma * fx - q[sa] + r);
}

void general_step_inplace(Vec& q, Vec& f, double alpha, const Mdp& mdp,
                          RngStream& stream, const DprSampler& sampler,
                          DprDraw& draw) {
  sampler(stream, draw);
  f = state_max(mdp, q);
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    double pf = 0.0;
    for (int s = 0; s < mdp.n_states; ++s) {
      pf += draw.p[size_t(sa) * mdp.n_states + s] * f[s];
    }
    q[sa] += alpha * draw.d_diag[sa] * (mdp.gamma * pf - q[sa] + draw.r[sa]);
  }
}

}  // namespace

double q_ball_radius(const Mdp& mdp, const Vec& q_star) {
  if (int(q_star.size()) != mdp.n_sa()) {
    throw std::invalid_argument("q_ball_radius: q* dimension mismatch");
  }
  double lo, hi;
  clip_bounds(mdp, lo, hi);
  const Vec f = state_max(mdp, q_star);
  // One-step drift bound: ||q' - q*|| <= (1 - a(1-gamma)) ||q - q*|| + a C
  // with C covering every reachable target value under clipped rewards.
  double c = 0.0;
  for (int sa = 0; sa < mdp.n_sa(); ++sa) {
    for (int x = 0; x < mdp.n_states; ++x) {
      c = std::max(c, std::abs(mdp.gamma * f[x] + hi - q_star[sa]));
      c = std::max(c, std::abs(mdp.gamma * f[x] + lo - q_star[sa]));
    }
  }
  return c / (1.0 - mdp.gamma);
}

DprSampler make_synchronous_sampler(const Mdp& mdp, RewardDist reward) {
  const Mdp m = mdp;
  return [m, reward](RngStream& stream, DprDraw& draw) {
    const int nsa = m.n_sa();
    draw.d_diag.assign(nsa, 1.0);
    draw.p.assign(size_t(nsa) * m.n_states, 0.0);
    draw.r.resize(nsa);
    for (int sa = 0; sa < nsa; ++sa) {
      const int x = stream.sample_categorical(m.row(sa));
      draw.p[size_t(sa) * m.n_states + x] = 1.0;
      draw.r[sa] = draw_reward(stream, m, sa, reward);
    }
  };
}

Vec q_step(std::span<const double> q, double alpha, const Mdp& mdp, QMode mode,
           RngStream& stream, RewardDist reward, const DprSampler* general) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("q_step: stepsize must lie in (0,1)");
  }
  if (int(q.size()) != mdp.n_sa()) {
    throw std::invalid_argument("q_step: q dimension mismatch");
  }
  Vec out(q.begin(), q.end());
  Vec f;
  switch (mode) {
    case QMode::Synchronous:
      sync_step_inplace(out, f, alpha, mdp, stream, reward);
      break;
    case QMode::Asynchronous:
      async_step_inplace(out, alpha, mdp, stream, reward);
      break;
    case QMode::GeneralDpr: {
      if (general == nullptr) {
        throw std::invalid_argument("q_step: GeneralDpr needs a sampler");
      }
      DprDraw draw;
      general_step_inplace(out, f, alpha, mdp, stream, *general, draw);
      break;
    }
  }
  guard_q(out, 1);
  return out;
}

Trajectory run_q_chain(const Vec& q0, double alpha, int64_t steps,
                       const Mdp& mdp, QMode mode, RngStream& stream,
                       int64_t record_stride, RewardDist reward,
                       const DprSampler* general) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("run_q_chain: stepsize must lie in (0,1)");
  }
  if (steps < 1) throw std::invalid_argument("run_q_chain: steps must be >= 1");
  if (record_stride < 1) {
    throw std::invalid_argument("run_q_chain: record_stride must be >= 1");
  }
  if (int(q0.size()) != mdp.n_sa()) {
    throw std::invalid_argument("run_q_chain: q0 dimension mismatch");
  }
  if (mode == QMode::GeneralDpr && general == nullptr) {
    throw std::invalid_argument("run_q_chain: GeneralDpr needs a sampler");
  }
  Trajectory traj;
  traj.alpha = alpha;
  traj.dim = mdp.n_sa();
  traj.total_steps = steps;
  traj.record_stride = record_stride;
  traj.tag = mode == QMode::Synchronous    ? "synchronous"
             : mode == QMode::Asynchronous ? "asynchronous"
                                           : "general-dpr";
  traj.data.reserve(size_t(steps / record_stride + 1) * traj.dim);

  Vec q = q0;
  Vec f;
  DprDraw draw;
  traj.data.insert(traj.data.end(), q.begin(), q.end());
  for (int64_t s = 1; s <= steps; ++s) {
    switch (mode) {
      case QMode::Synchronous:
        sync_step_inplace(q, f, alpha, mdp, stream, reward);
        break;
      case QMode::Asynchronous:
        async_step_inplace(q, alpha, mdp, stream, reward);
        break;
      case QMode::GeneralDpr:
        general_step_inplace(q, f, alpha, mdp, stream, *general, draw);
        break;
    }
    guard_q(q, s);
    if (s % record_stride == 0) {
      traj.data.insert(traj.data.end(), q.begin(), q.end());
    }
  }
  return traj;
}

}  // namespace salab
