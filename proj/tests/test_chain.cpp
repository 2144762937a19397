#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "salab/chain.hpp"

using namespace salab;

namespace {

Operator ar1_op(double a) {
  Mat A(1, 1);
  A(0, 0) = a;
  return linear_op(A, {0.0});
}

}  // namespace

TEST_CASE("sa_step direct arithmetic") {
  const Operator abs_op = scaled_abs_op(0.0);
  // theta = 1, alpha = 0.1, w = 0: 1 + 0.1(-0.5 - 1) = 0.85.
  CHECK(sa_step(Vec{1.0}, 0.1, abs_op, Vec{0.0})[0] == doctest::Approx(0.85));

  const Operator lin = ar1_op(0.5);
  // theta = 2, alpha = 0.2, w = 1: 2 + 0.2(1 - 2 + 1) = 2.0.
  CHECK(sa_step(Vec{2.0}, 0.2, lin, Vec{1.0})[0] == doctest::Approx(2.0));

  // Fixed point with zero noise stays put.
  const Operator shifted = scaled_abs_op(-0.3);
  const Vec star = *shifted.fixed_point();
  CHECK(sa_step(star, 0.25, shifted, Vec{0.0})[0] == doctest::Approx(star[0]));
}

TEST_CASE("sa_step validates arguments") {
  const Operator lin = ar1_op(0.5);
  CHECK_THROWS_AS(sa_step(Vec{1.0, 2.0}, 0.1, lin, Vec{0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(sa_step(Vec{1.0}, 1.5, lin, Vec{0.0}), std::invalid_argument);
}

TEST_CASE("run_chain deterministic geometric decay") {
  const Operator lin = ar1_op(0.5);
  const NoiseSampler none = NoiseSampler::gaussian_iso(1, 0.0);
  RngStream s(1);
  const Trajectory traj = run_chain(Vec{1.0}, 0.1, 50, lin, none, s);
  REQUIRE(traj.n_recorded() == 51);
  for (int t = 0; t <= 50; ++t) {
    CHECK(traj.at(t)[0] == doctest::Approx(std::pow(0.95, t)).epsilon(1e-12));
  }
}

TEST_CASE("run_chain respects record stride and length invariant") {
  const Operator lin = ar1_op(0.5);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(2);
  const Trajectory traj = run_chain(Vec{0.0}, 0.1, 103, lin, noise, s, 10);
  CHECK(traj.n_recorded() == 103 / 10 + 1);
  CHECK(traj.record_stride == 10);
  CHECK(traj.total_steps == 103);
}

TEST_CASE("run_chain reports divergence with the step index") {
  // An admissible operator but a huge noise shift pushes past the guard.
  const Operator lin = ar1_op(0.5);
  Mat sigma(1, 1);
  sigma(0, 0) = 1e22;
  const NoiseSampler big = NoiseSampler::gaussian(sigma);
  RngStream s(3);
  try {
    run_chain(Vec{0.0}, 0.5, 100, lin, big, s);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 1);
  }
}

TEST_CASE("stationary variance matches the AR(1) closed form") {
  // theta' = (1 - alpha/2) theta + alpha w: var = alpha sigma^2/(1 - alpha/4).
  const Operator lin = ar1_op(0.5);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  const double alpha = 0.1;
  const double target = alpha / (1.0 - 0.25 * alpha);
  const int R = 16;
  const int64_t steps = 200000;
  double mean_of_vars = 0.0, var_of_vars = 0.0;
  std::vector<double> vs;
  RngStream root(4);
  for (int r = 0; r < R; ++r) {
    RngStream s = root.split(r);
    const Trajectory traj = run_chain(Vec{0.0}, alpha, steps, lin, noise, s);
    double acc = 0.0;
    int64_t n = 0;
    for (int64_t t = steps / 2; t <= steps; ++t) {
      acc += traj.at(t)[0] * traj.at(t)[0];
      ++n;
    }
    vs.push_back(acc / double(n));
  }
  for (double v : vs) mean_of_vars += v;
  mean_of_vars /= R;
  for (double v : vs) var_of_vars += (v - mean_of_vars) * (v - mean_of_vars);
  const double se = std::sqrt(var_of_vars / (R - 1.0) / R);
  CHECK(std::abs(mean_of_vars - target) <= 3.0 * se);
}

TEST_CASE("long-run mean of the nonsmooth example is negative") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  const int R = 16;
  const int64_t steps = 100000;
  std::vector<double> means;
  RngStream root(5);
  for (int r = 0; r < R; ++r) {
    RngStream s = root.split(r);
    const Trajectory traj = run_chain(Vec{1.0}, 0.1, steps, op, noise, s);
    double acc = 0.0;
    int64_t n = 0;
    for (int64_t t = steps / 2; t <= steps; ++t) {
      acc += traj.at(t)[0];
      ++n;
    }
    means.push_back(acc / double(n));
  }
  double m = 0.0, v = 0.0;
  for (double x : means) m += x;
  m /= R;
  for (double x : means) v += (x - m) * (x - m);
  const double se = std::sqrt(v / (R - 1.0) / R);
  CHECK(m < 0.0);
  CHECK(std::abs(m) > 3.0 * se);
}

TEST_CASE("rescale round trip and arithmetic") {
  const Operator lin = ar1_op(0.5);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(6);
  const Trajectory traj = run_chain(Vec{1.0}, 0.04, 100, lin, noise, s);
  const Vec star{0.0};
  const Trajectory y = rescale(traj, star);
  // alpha = 0.04: Y = (theta - 0) / 0.2.
  for (int64_t t = 0; t <= 100; ++t) {
    CHECK(y.at(t)[0] == doctest::Approx(traj.at(t)[0] / 0.2).epsilon(1e-12));
  }
  // Un-rescale recovers the original.
  Trajectory back = y;
  for (int64_t t = 0; t <= 100; ++t) {
    back.at(t)[0] = back.at(t)[0] * 0.2 + star[0];
    CHECK(back.at(t)[0] == doctest::Approx(traj.at(t)[0]).epsilon(1e-12));
  }
}

TEST_CASE("trajectory CSV carries raw step indices and exact floats") {
  const Operator lin = ar1_op(0.5);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(14);
  const Trajectory traj = run_chain(Vec{1.0}, 0.1, 40, lin, noise, s, 10);
  const std::string csv = trajectory_csv(traj);
  CHECK(csv.rfind("step,component_0\n0,1\n10,", 0) == 0);
  // One header plus one row per recorded iterate.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + traj.n_recorded());
}

TEST_CASE("shared-noise coupling: identical starts stay identical") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(7);
  const auto sq = coupled_shared_noise(Vec{0.7}, Vec{0.7}, 0.1, 200, op, noise, s);
  for (double v : sq) CHECK(v == 0.0);
}

TEST_CASE("shared-noise coupling: linear contraction ratio is exact") {
  const Operator lin = ar1_op(0.5);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(8);
  const double alpha = 0.2;
  const auto sq = coupled_shared_noise(Vec{1.0}, Vec{-1.0}, alpha, 50, lin, noise, s);
  // Difference recursion: (1 - alpha/2)^2 per squared step, noise cancels.
  const double ratio = (1.0 - 0.5 * alpha) * (1.0 - 0.5 * alpha);
  for (size_t t = 1; t < sq.size(); ++t) {
    CHECK(sq[t] == doctest::Approx(sq[t - 1] * ratio).epsilon(1e-12));
  }
}

TEST_CASE("shared-noise coupling obeys the geometric envelope in the mean") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  const double alpha = 0.1;
  const int R = 200;
  const int64_t steps = 500;
  std::vector<double> mean_sq(size_t(steps) + 1, 0.0);
  RngStream root(9);
  for (int r = 0; r < R; ++r) {
    RngStream s = root.split(r);
    const auto sq =
        coupled_shared_noise(Vec{1.0}, Vec{-1.0}, alpha, steps, op, noise, s);
    for (size_t t = 0; t < sq.size(); ++t) mean_sq[t] += sq[t];
  }
  const double rate = 1.0 - alpha * (1.0 - std::sqrt(0.5));
  double bound = mean_sq[0] / R;
  for (size_t t = 0; t < mean_sq.size(); ++t) {
    CHECK(mean_sq[t] / R <= bound * (1.0 + 1e-12));
    bound *= rate;
  }
}

TEST_CASE("stepsize-ratio coupling: k = 1 collapses to zero distance") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  RngStream s(10);
  const auto sq = coupled_stepsize_ratio(0.2, 1, 300, op, noise, s,
                                         *op.fixed_point());
  for (double v : sq) CHECK(v == 0.0);
}

TEST_CASE("stepsize-ratio coupling rejects non-gaussian noise") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler rad = NoiseSampler::rademacher_iso(1, 1.0);
  RngStream s(11);
  CHECK_THROWS_AS(
      coupled_stepsize_ratio(0.2, 2, 10, op, rad, s, *op.fixed_point()),
      UnsupportedError);
}

TEST_CASE("stepsize-ratio coupling shrinks as alpha shrinks") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  const int R = 100;
  const int64_t steps = 1500;
  std::vector<double> longrun;
  RngStream root(12);
  int ai = 0;
  for (double alpha : {0.4, 0.2, 0.1, 0.05}) {
    double acc = 0.0;
    int64_t count = 0;
    for (int r = 0; r < R; ++r) {
      RngStream s = root.split(ai).split(r);
      const auto sq = coupled_stepsize_ratio(alpha, 2, steps, op, noise, s,
                                             *op.fixed_point());
      for (int64_t t = steps / 2; t <= steps; ++t) {
        acc += sq[size_t(t)];
        ++count;
      }
    }
    longrun.push_back(acc / double(count));
    ++ai;
  }
  for (size_t i = 1; i < longrun.size(); ++i) CHECK(longrun[i] < longrun[i - 1]);
}

TEST_CASE("coupled chains beat independent chains") {
  const Operator op = scaled_abs_op(0.0);
  const NoiseSampler noise = NoiseSampler::gaussian_iso(1, 1.0);
  const double alpha = 0.2;
  const int k = 4;
  const int R = 100;
  const int64_t steps = 1000;
  RngStream root(13);
  double coupled = 0.0;
  int64_t n = 0;
  for (int r = 0; r < R; ++r) {
    RngStream s = root.split(0).split(r);
    const auto sq =
        coupled_stepsize_ratio(alpha, k, steps, op, noise, s, *op.fixed_point());
    for (int64_t t = steps / 2; t <= steps; ++t) {
      coupled += sq[size_t(t)];
      ++n;
    }
  }
  coupled /= double(n);

  // Independent product chain: same marginals, independent streams.
  double indep = 0.0;
  n = 0;
  for (int r = 0; r < R; ++r) {
    RngStream s1 = root.split(1).split(r);
    RngStream s2 = root.split(2).split(r);
    const Trajectory slow =
        run_chain(*op.fixed_point(), alpha, steps, op, noise, s1);
    const Trajectory fast = run_chain(*op.fixed_point(), alpha / k,
                                      steps * k, op, noise, s2, k);
    for (int64_t t = steps / 2; t <= steps; ++t) {
      const double ys = slow.at(t)[0] / std::sqrt(alpha);
      const double yf = fast.at(t)[0] / std::sqrt(alpha / k);
      indep += (ys - yf) * (ys - yf);
      ++n;
    }
  }
  indep /= double(n);
  CHECK(coupled < indep);
}
