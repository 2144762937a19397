#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "salab/errors.hpp"
#include "salab/mdp.hpp"

using namespace salab;

namespace {

Mdp single_state_mdp(double gamma, double r) {
  Mdp m;
  m.n_states = 1;
  m.n_actions = 1;
  m.gamma = gamma;
  m.reward_noise_std = 0.0;
  m.P = {1.0};
  m.r_bar = {r};
  m.kappa_b = {1.0};
  m.validate();
  return m;
}

// Two states, one action: state 0 -> state 1, state 1 absorbing.
Mdp chain_mdp(double gamma) {
  Mdp m;
  m.n_states = 2;
  m.n_actions = 1;
  m.gamma = gamma;
  m.reward_noise_std = 0.0;
  m.P = {0.0, 1.0,   // from (0, a0)
         0.0, 1.0};  // from (1, a0)
  m.r_bar = {1.0, 0.0};
  m.kappa_b = {0.5, 0.5};
  m.validate();
  return m;
}

}  // namespace

TEST_CASE("bellman_apply arithmetic") {
  const Mdp m = single_state_mdp(0.9, 1.0);
  const Vec ones{1.0};
  CHECK(bellman_apply(Vec{0.0}, m, ones)[0] == doctest::Approx(1.0));

  // gamma = 0 collapses to the reward.
  const Mdp m0 = single_state_mdp(0.0, 2.5);
  CHECK(bellman_apply(Vec{123.0}, m0, ones)[0] == doctest::Approx(2.5));
}

TEST_CASE("bellman_apply keeps q* fixed for any valid D") {
  RngStream s(1);
  const Mdp m = random_mdp(s, 4, 3, 0.85, 0.0);
  const Vec q_star = solve_q_star(m, 1e-13);
  RngStream ds(2);
  for (int rep = 0; rep < 10; ++rep) {
    Vec d(m.n_sa());
    for (double& x : d) x = ds.uniform(0.05, 1.0);
    const Vec h = bellman_apply(q_star, m, d);
    CHECK(dist_of(Norm::LInf, h, q_star) <= 1e-10);
  }
}

TEST_CASE("bellman_apply rejects bad weights") {
  const Mdp m = single_state_mdp(0.9, 1.0);
  CHECK_THROWS_AS(bellman_apply(Vec{0.0}, m, Vec{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(bellman_apply(Vec{0.0}, m, Vec{1.5}), std::invalid_argument);
  CHECK_THROWS_AS(bellman_apply(Vec{0.0, 1.0}, m, Vec{1.0}),
                  std::invalid_argument);
}

TEST_CASE("solve_q_star oracles") {
  SUBCASE("geometric series") {
    const Mdp m = single_state_mdp(0.9, 1.0);
    const Vec q = solve_q_star(m, 1e-12);
    CHECK(q[0] == doctest::Approx(10.0).epsilon(1e-10));
  }
  SUBCASE("gamma = 0 returns rewards") {
    const Mdp m = single_state_mdp(0.0, 3.25);
    CHECK(solve_q_star(m, 1e-12)[0] == 3.25);
  }
  SUBCASE("two-state chain solved by hand") {
    // q0 = 1 + 0.5 q1, q1 = 0 + 0.5 q1 -> q = (1, 0).
    const Mdp m = chain_mdp(0.5);
    const Vec q = solve_q_star(m, 1e-12);
    CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(q[1] == doctest::Approx(0.0).epsilon(1e-11));
  }
  SUBCASE("residual meets the threshold on random MDPs") {
    RngStream s(3);
    for (int rep = 0; rep < 20; ++rep) {
      const Mdp m = random_mdp(s, 5, 3, 0.9, 0.0);
      const Vec q = solve_q_star(m, 1e-12);
      const Vec h = bellman_apply(q, m, Vec(m.n_sa(), 1.0));
      CHECK(dist_of(Norm::LInf, h, q) <= 1e-12 * (1.0 - m.gamma) / m.gamma);
    }
  }
  SUBCASE("iteration cap raises") {
    const Mdp m = single_state_mdp(0.99, 1.0);
    CHECK_THROWS_AS(solve_q_star(m, 1e-12, 3), NoConvergenceError);
  }
}

TEST_CASE("value-iteration residual contracts per sweep") {
  RngStream s(4);
  const Mdp m = random_mdp(s, 4, 2, 0.9, 0.0);
  const Vec ones(m.n_sa(), 1.0);
  Vec q(m.n_sa(), 0.0);
  Vec h = bellman_apply(q, m, ones);
  double res = dist_of(Norm::LInf, h, q);
  for (int sweep = 0; sweep < 60; ++sweep) {
    q = h;
    h = bellman_apply(q, m, ones);
    const double next = dist_of(Norm::LInf, h, q);
    CHECK(next <= m.gamma * res * (1.0 + 1e-12) + 1e-15);
    res = next;
  }
}

TEST_CASE("classification") {
  RngStream s(5);
  SUBCASE("type-a construction ties state 0") {
    const Mdp m = make_type_a(random_mdp(s, 3, 2, 0.9, 0.0));
    const Vec q = solve_q_star(m, 1e-13);
    const auto cls = classify(m, q, 1e-9);
    CHECK(cls.states.tied[0] == 1);
    CHECK(cls.states.rooted[0] == 0);
    CHECK(cls.type == MdpType::TypeA);
    REQUIRE(cls.witness.has_value());
    CHECK(*cls.witness == 0);
    // Identical rows force exactly equal optimal values.
    CHECK(q[m.sa_index(0, 0)] == q[m.sa_index(0, 1)]);
  }
  SUBCASE("single action means no ties") {
    const Mdp m = random_mdp(s, 4, 1, 0.9, 0.0);
    const auto cls = classify(m, solve_q_star(m, 1e-13), 1e-9);
    for (char t : cls.states.tied) CHECK(t == 0);
    CHECK(cls.type == MdpType::TypeB);
  }
  SUBCASE("random draw is type B almost surely") {
    for (int rep = 0; rep < 20; ++rep) {
      const Mdp m = random_mdp(s, 3, 2, 0.9, 0.0);
      const auto cls = classify(m, solve_q_star(m, 1e-13), 1e-9);
      CHECK(cls.type == MdpType::TypeB);
    }
  }
  SUBCASE("tied but rooted state stays type B") {
    // State 2 unreachable; its two actions are identical, so it is tied.
    Mdp m;
    m.n_states = 3;
    m.n_actions = 2;
    m.gamma = 0.5;
    m.reward_noise_std = 0.0;
    m.P = {
        1.0, 0.0, 0.0,  // (0,a0)
        0.0, 1.0, 0.0,  // (0,a1)
        0.0, 1.0, 0.0,  // (1,a0)
        1.0, 0.0, 0.0,  // (1,a1)
        0.5, 0.5, 0.0,  // (2,a0)
        0.5, 0.5, 0.0,  // (2,a1)
    };
    m.r_bar = {1.0, 0.0, 0.5, 0.25, 0.4, 0.4};
    m.kappa_b.assign(6, 1.0 / 6.0);
    m.validate();
    const Vec q = solve_q_star(m, 1e-13);
    const auto cls = classify(m, q, 1e-9);
    CHECK(cls.states.tied[2] == 1);
    CHECK(cls.states.rooted[2] == 1);
    CHECK(cls.type == MdpType::TypeB);
  }
  SUBCASE("tie_tol must be positive") {
    const Mdp m = random_mdp(s, 2, 2, 0.9, 0.0);
    CHECK_THROWS_AS(classify(m, solve_q_star(m, 1e-13), 0.0),
                    std::invalid_argument);
  }
}

TEST_CASE("classification ignores constant reward shifts") {
  RngStream s(6);
  const Mdp m = make_type_a(random_mdp(s, 3, 2, 0.9, 0.0));
  Mdp shifted = m;
  for (double& r : shifted.r_bar) r += 7.5;
  const auto a = classify(m, solve_q_star(m, 1e-13), 1e-9);
  const auto b = classify(shifted, solve_q_star(shifted, 1e-13), 1e-9);
  CHECK((a.type == b.type));
  for (int st = 0; st < m.n_states; ++st) {
    CHECK(a.states.tied[st] == b.states.tied[st]);
    CHECK(a.states.optimal_actions[st] == b.states.optimal_actions[st]);
  }
}

TEST_CASE("random_mdp shape and simplex rows") {
  RngStream s(7);
  const Mdp m = random_mdp(s, 3, 2, 0.9, std::sqrt(0.3));
  CHECK(m.n_states == 3);
  CHECK(m.n_actions == 2);
  CHECK(m.reward_noise_std == doctest::Approx(std::sqrt(0.3)));
  for (int sa = 0; sa < m.n_sa(); ++sa) {
    double sum = 0.0;
    for (int st = 0; st < m.n_states; ++st) sum += m.row(sa)[st];
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  for (double r : m.r_bar) {
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  for (double k : m.kappa_b) CHECK(k == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("make_type_a is idempotent and needs two actions") {
  RngStream s(8);
  const Mdp m = random_mdp(s, 3, 2, 0.9, 0.0);
  const Mdp once = make_type_a(m);
  const Mdp twice = make_type_a(once);
  CHECK(once.P == twice.P);
  CHECK(once.r_bar == twice.r_bar);
  const Mdp single = random_mdp(s, 2, 1, 0.9, 0.0);
  CHECK_THROWS_AS(make_type_a(single), std::invalid_argument);
}

TEST_CASE("one-state tied MDP self-loops, so it is type A") {
  RngStream s(9);
  const Mdp m = make_type_a(random_mdp(s, 1, 2, 0.9, 0.0));
  // The single Dirichlet row must put all mass on the only state.
  CHECK(m.P[0] == doctest::Approx(1.0));
  const auto cls = classify(m, solve_q_star(m, 1e-13), 1e-9);
  CHECK(cls.states.rooted[0] == 0);
  CHECK(cls.type == MdpType::TypeA);
}

TEST_CASE("gamma0 formula and empirical sup-norm contraction") {
  RngStream s(10);
  const Mdp m = random_mdp(s, 3, 2, 0.9, 0.0);
  const Vec ones(m.n_sa(), 1.0);
  CHECK(gamma0(m, ones) == doctest::Approx(0.9));
  Vec d(m.n_sa(), 1.0);
  d[2] = 0.5;
  CHECK(gamma0(m, d) == doctest::Approx(0.95));
  CHECK_THROWS_AS(gamma0(m, Vec(m.n_sa(), 0.0)), std::invalid_argument);

  // ||H(q) - H(q')||_inf <= gamma0 ||q - q'||_inf on random pairs.
  RngStream ps(11);
  Vec dd(m.n_sa());
  for (double& x : dd) x = ps.uniform(0.2, 1.0);
  const double g0 = gamma0(m, dd);
  for (int rep = 0; rep < 2000; ++rep) {
    Vec q1(m.n_sa()), q2(m.n_sa());
    for (int i = 0; i < m.n_sa(); ++i) {
      q1[i] = ps.uniform(-10.0, 10.0);
      q2[i] = ps.uniform(-10.0, 10.0);
    }
    const Vec h1 = bellman_apply(q1, m, dd);
    const Vec h2 = bellman_apply(q2, m, dd);
    CHECK(dist_of(Norm::LInf, h1, h2) <=
          g0 * dist_of(Norm::LInf, q1, q2) + 1e-9);
  }
}

TEST_CASE("text round trip is exact") {
  RngStream s(12);
  const Mdp m = random_mdp(s, 3, 2, 0.9, std::sqrt(0.3));
  const std::string text = mdp_to_string(m);
  const Mdp back = mdp_from_string(text);
  CHECK(back.n_states == m.n_states);
  CHECK(back.n_actions == m.n_actions);
  CHECK(back.gamma == m.gamma);
  CHECK(back.reward_noise_std == m.reward_noise_std);
  CHECK(back.P == m.P);
  CHECK(back.r_bar == m.r_bar);
  CHECK(back.kappa_b == m.kappa_b);
  // And the re-serialization is byte-identical.
  CHECK(mdp_to_string(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "salab_mdp_rt.txt";
  save_mdp(m, path.string());
  const Mdp loaded = load_mdp(path.string());
  CHECK(mdp_to_string(loaded) == text);
  std::filesystem::remove(path);
}

TEST_CASE("parse failures carry diagnostics") {
  CHECK_THROWS_AS(mdp_from_string("not a header"), ParseError);
  CHECK_THROWS_AS(mdp_from_string("2 1 0.5 0.0\n1.0 0.0\n"), ParseError);
  // Row that does not sum to one.
  CHECK_THROWS_AS(
      mdp_from_string("1 1 0.5 0.0\n0.7\n1.0\n1.0\n"), ParseError);
}
