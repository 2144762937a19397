#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "salab/linalg.hpp"
#include "salab/rng.hpp"

namespace salab {

/// Finite discounted MDP. P is (|S||A|) x |S| row-stochastic with rows in
/// state-action index order sa = s * n_actions + a; r_bar holds expected
/// rewards; kappa_b is the state-action sampling distribution used by
/// asynchronous updates. Immutable after construction in practice.
struct Mdp {
  int n_states = 0;
  int n_actions = 0;
  double gamma = 0.0;
  double reward_noise_std = 0.0;
  std::vector<double> P;        // (n_sa x n_states) row-major
  std::vector<double> r_bar;    // n_sa
  std::vector<double> kappa_b;  // n_sa

  int n_sa() const { return n_states * n_actions; }
  int sa_index(int s, int a) const { return s * n_actions + a; }
  std::span<const double> row(int sa) const {
    return {P.data() + size_t(sa) * n_states, size_t(n_states)};
  }

  /// Shape and stochasticity checks; throws std::invalid_argument.
  void validate() const;
};

struct StateClassification {
  std::vector<char> tied;                     // per state
  std::vector<char> rooted;                   // per state
  std::vector<std::vector<int>> optimal_actions;  // A*(s) per state
};

enum class MdpType { TypeA, TypeB };

struct ClassificationResult {
  StateClassification states;
  MdpType type = MdpType::TypeB;
  std::optional<int> witness;  // a tied, non-rooted state when TypeA
};

/// Per-state max f_s(q) = max_a q(s,a).
Vec state_max(const Mdp& mdp, std::span<const double> q);

/// Weighted optimal Bellman operator
/// H(q) = gamma D P f(q) + (I - D) q + D r_bar, with D = diag(d_diag).
Vec bellman_apply(std::span<const double> q, const Mdp& mdp,
                  std::span<const double> d_diag);

/// Value iteration with D = I until ||H(q) - q||_inf <= tol (1-gamma)/gamma,
/// which pins the returned iterate within tol of q*. max_iters = 0 derives
/// the cap from the contraction rate plus slack.
Vec solve_q_star(const Mdp& mdp, double tol = 1e-12, int64_t max_iters = 0);

/// Tied/rooted flags per state and the Type A/B call. A state is tied when
/// more than one action is within tie_tol of the per-state max of q*;
/// rooted when no state-action pair reaches it.
ClassificationResult classify(const Mdp& mdp, std::span<const double> q_star,
                              double tie_tol = 1e-9);

/// Dirichlet(1) transition rows, rewards uniform on [0,1], uniform kappa_b.
Mdp random_mdp(RngStream& stream, int n_states, int n_actions, double gamma,
               double reward_noise_std);

/// Copy with action 1 of state 0 sharing action 0's transition row and
/// expected reward, forcing a tie at state 0.
Mdp make_type_a(const Mdp& mdp);

/// gamma0 = 1 - (1-gamma) min_i D_ii, the contraction modulus of the
/// weighted Bellman operator in the sup norm.
double gamma0(const Mdp& mdp, std::span<const double> d_diag);

/// Plain-text serialization: header line
/// "n_states n_actions gamma reward_noise_std", then one line per P row,
/// then r_bar, then kappa_b. Floats printed with 17 significant digits so
/// the round trip is exact.
void save_mdp(const Mdp& mdp, const std::string& path);
Mdp load_mdp(const std::string& path);
std::string mdp_to_string(const Mdp& mdp);
Mdp mdp_from_string(const std::string& text);

}  // namespace salab
