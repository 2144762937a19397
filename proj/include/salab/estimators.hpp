#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salab/chain.hpp"
#include "salab/mdp.hpp"
#include "salab/operators.hpp"
#include "salab/qlearning.hpp"
#include "salab/rng.hpp"

namespace salab {

/// Mean of the recorded iterates with index in [k0, n_recorded).
/// With record_stride > 1 this is the stride-aware average of the stored
/// samples, not of every raw iterate.
Vec tail_average(const Trajectory& traj, int64_t k0);

/// Richardson-Romberg combination
/// (2^beta avg_alpha - avg_2alpha) / (2^beta - 1); cancels a bias term of
/// order alpha^beta shared by both inputs.
Vec rr_extrapolate(const Vec& avg_alpha, const Vec& avg_2alpha, double beta);

/// Bias of the tail-averaged (and optionally RR-extrapolated) iterates at
/// one stepsize, with cross-replica standard errors.
struct BiasEntry {
  double alpha = 0.0;
  Vec ta_bias;
  Vec ta_stderr;
  Vec rr_bias;    // empty unless RR was requested
  Vec rr_stderr;  // empty unless RR was requested
  int replicas = 0;
  int64_t steps = 0;
};

struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
};

/// Per-stepsize bias estimates plus log-log slope fits of the bias
/// magnitude against alpha, in both the dynamic's contraction norm and l1.
struct BiasReport {
  int dim = 0;
  Norm norm = Norm::L2;
  std::vector<BiasEntry> entries;
  SlopeFit ta_slope_cnorm, ta_slope_l1;
  SlopeFit rr_slope_cnorm, rr_slope_l1;
  bool has_rr = false;
};

/// R independent replicas of the additive-noise chain; each is
/// tail-averaged from k0 = k0_fraction * steps. When rr_beta is set, a
/// companion chain at 2 alpha shares the identical noise sequence and the
/// RR combination is reported alongside. theta* must be declared on the
/// operator. Replica r draws from stream.split(r).
BiasEntry estimate_bias(const Operator& op, const NoiseSampler& noise,
                        double alpha, int replicas, int64_t steps,
                        double k0_fraction, const RngStream& stream,
                        std::optional<double> rr_beta, const Vec& theta0,
                        int threads = 1);

/// Q-learning variant; theta* = q* from value iteration (passed in so the
/// caller can reuse it across stepsizes).
BiasEntry estimate_bias_q(const Mdp& mdp, QMode mode, RewardDist reward,
                          const Vec& q_star, double alpha, int replicas,
                          int64_t steps, double k0_fraction,
                          const RngStream& stream,
                          std::optional<double> rr_beta, const Vec& q0,
                          int threads = 1);

/// Sweep over stepsizes and fit slopes. Magnitudes are ||bias||_c and
/// ||bias||_1 per alpha.
BiasReport bias_report_from_entries(std::vector<BiasEntry> entries, int dim,
                                    Norm norm, bool has_rr);

enum class W2Method { Quantile1D, Assignment };

struct W2Estimate {
  double value = 0.0;
  W2Method method = W2Method::Quantile1D;
  size_t n = 0;
  size_t m = 0;
};

/// Exact empirical W2 in one dimension: sort both samples and pair order
/// statistics. Unequal sizes fall back to evaluating both empirical
/// quantile functions on a common mid-point grid.
W2Estimate empirical_w2_1d(std::span<const double> xs,
                           std::span<const double> ys);

/// Exact empirical W2 for d-vectors via the n x n minimum-cost assignment
/// with cost ||x_i - y_j||_c^2. n above the cap is refused (O(n^3) cost);
/// use the 1-D estimate per coordinate or subsample instead.
W2Estimate empirical_w2_assignment(std::span<const double> xs,
                                   std::span<const double> ys, size_t n,
                                   int dim, Norm norm, size_t cap = 256);

/// Minimum total cost over all row-column assignments of a dense n x n
/// cost matrix (Jonker-Volgenant style shortest augmenting paths).
double assignment_min_cost(const std::vector<double>& cost, size_t n);

/// Tail-sample mean of ||theta_t - theta*||_c^(2n), 2n in {2,4,6,8}.
double moment_estimate(const Trajectory& traj, const Vec& theta_star,
                       Norm norm, int order, int64_t k0);

/// OLS (or weighted LS) of log magnitude on log alpha. Needs >= 3 strictly
/// positive pairs; returns the slope and its standard error.
SlopeFit fit_loglog_slope(std::span<const double> alphas,
                          std::span<const double> magnitudes,
                          std::span<const double> weights = {});

}  // namespace salab
