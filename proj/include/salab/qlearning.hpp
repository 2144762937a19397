#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "salab/chain.hpp"
#include "salab/mdp.hpp"
#include "salab/rng.hpp"

namespace salab {

enum class QMode { Synchronous, Asynchronous, GeneralDpr };

/// How sampled rewards are drawn around r_bar: Gaussian N(r_bar, sigma_r^2)
/// per the usual model, or uniform on r_bar +- sqrt(3) sigma_r, which is
/// bounded with the same variance (all moments finite). GaussianClipped is a
/// diagnostic mode that clamps each Gaussian draw into
/// [min r_bar - 5 sigma_r, max r_bar + 5 sigma_r]; with bounded rewards the
/// iterates provably stay inside the ball given by q_ball_radius.
enum class RewardDist { Gaussian, UniformBounded, GaussianClipped };

/// Radius of the invariant ball around q* for bounded rewards
/// |r| <= r_clip: once ||q - q*||_inf is below this, it stays below.
double q_ball_radius(const Mdp& mdp, const Vec& q_star);

/// One draw of (D_t, P_t, r_t) for the general update
/// q' = q + alpha D (gamma P f(q) - q + r).
struct DprDraw {
  std::vector<double> d_diag;  // n_sa, entries in [0,1]
  std::vector<double> p;       // dense (n_sa x n_states) row-major
  std::vector<double> r;       // n_sa
};

using DprSampler = std::function<void(RngStream&, DprDraw&)>;

/// Sampler reproducing the synchronous driver exactly: D = I, one-hot
/// transition rows drawn per state-action pair, rewards drawn per pair, in
/// the same stream order as the synchronous fast path. With matched seeds
/// the GeneralDpr trajectory is bit-identical to the Synchronous one.
DprSampler make_synchronous_sampler(const Mdp& mdp,
                                    RewardDist reward = RewardDist::Gaussian);

/// One Q-learning step. Synchronous updates every pair from its own sampled
/// next state and reward; Asynchronous updates the single pair drawn from
/// kappa_b; GeneralDpr applies the supplied draw literally.
Vec q_step(std::span<const double> q, double alpha, const Mdp& mdp, QMode mode,
           RngStream& stream, RewardDist reward = RewardDist::Gaussian,
           const DprSampler* general = nullptr);

/// Iterated q_step. The trajectory is tagged with the mode name.
Trajectory run_q_chain(const Vec& q0, double alpha, int64_t steps,
                       const Mdp& mdp, QMode mode, RngStream& stream,
                       int64_t record_stride = 1,
                       RewardDist reward = RewardDist::Gaussian,
                       const DprSampler* general = nullptr);

}  // namespace salab
