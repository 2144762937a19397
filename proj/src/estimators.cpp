#include "salab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "salab/parallel.hpp"

namespace salab {

Vec tail_average(const Trajectory& traj, int64_t k0) {
  const int64_t n = traj.n_recorded();
  if (k0 < 0 || k0 >= n) {
    throw std::invalid_argument("tail_average: empty averaging window");
  }
  Vec sum(traj.dim, 0.0);
  for (int64_t i = k0; i < n; ++i) {
    const auto row = traj.at(i);
    for (int j = 0; j < traj.dim; ++j) sum[j] += row[j];
  }
  const double count = double(n - k0);
  for (double& v : sum) v /= count;
  return sum;
}

Vec rr_extrapolate(const Vec& avg_alpha, const Vec& avg_2alpha, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("rr_extrapolate: beta must be positive");
  }
  if (avg_alpha.size() != avg_2alpha.size()) {
    throw std::invalid_argument("rr_extrapolate: dimension mismatch");
  }
  const double p = std::pow(2.0, beta);
  const double c1 = p / (p - 1.0);
  const double c2 = 1.0 / (p - 1.0);
  Vec out(avg_alpha.size());
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = c1 * avg_alpha[i] - c2 * avg_2alpha[i];
  }
  return out;
}

namespace {

struct ReplicaResult {
  Vec ta;
  Vec rr;
};

void reduce_entries(BiasEntry& entry, const std::vector<ReplicaResult>& reps,
                    const Vec& target, bool has_rr) {
  const int d = int(target.size());
  const int R = int(reps.size());
  entry.ta_bias.assign(d, 0.0);
  entry.ta_stderr.assign(d, 0.0);
  if (has_rr) {
    entry.rr_bias.assign(d, 0.0);
    entry.rr_stderr.assign(d, 0.0);
  }
  for (const auto& r : reps) {
    for (int j = 0; j < d; ++j) {
      entry.ta_bias[j] += r.ta[j] - target[j];
      if (has_rr) entry.rr_bias[j] += r.rr[j] - target[j];
    }
  }
  for (int j = 0; j < d; ++j) {
    entry.ta_bias[j] /= R;
    if (has_rr) entry.rr_bias[j] /= R;
  }
  if (R < 2) return;
  for (const auto& r : reps) {
    for (int j = 0; j < d; ++j) {
      const double dta = (r.ta[j] - target[j]) - entry.ta_bias[j];
      entry.ta_stderr[j] += dta * dta;
      if (has_rr) {
        const double drr = (r.rr[j] - target[j]) - entry.rr_bias[j];
        entry.rr_stderr[j] += drr * drr;
      }
    }
  }
  for (int j = 0; j < d; ++j) {
    entry.ta_stderr[j] = std::sqrt(entry.ta_stderr[j] / (R - 1.0) / R);
    if (has_rr) entry.rr_stderr[j] = std::sqrt(entry.rr_stderr[j] / (R - 1.0) / R);
  }
}

void check_bias_args(double alpha, int replicas, int64_t steps,
                     double k0_fraction, std::optional<double> rr_beta) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("estimate_bias: alpha must lie in (0,1)");
  }
  if (rr_beta && !(2.0 * alpha < 1.0)) {
    throw std::invalid_argument(
        "estimate_bias: RR companion stepsize 2*alpha must stay below 1");
  }
  if (replicas < 2) {
    throw std::invalid_argument("estimate_bias: need at least 2 replicas");
  }
  if (steps < 2) throw std::invalid_argument("estimate_bias: too few steps");
  if (!(k0_fraction >= 0.0 && k0_fraction < 1.0)) {
    throw std::invalid_argument("estimate_bias: k0_fraction must be in [0,1)");
  }
  if (rr_beta && !(*rr_beta > 0.0)) {
    throw std::invalid_argument("estimate_bias: rr beta must be positive");
  }
}

}  // namespace

BiasEntry estimate_bias(const Operator& op, const NoiseSampler& noise,
                        double alpha, int replicas, int64_t steps,
                        double k0_fraction, const RngStream& stream,
                        std::optional<double> rr_beta, const Vec& theta0,
                        int threads) {
  check_bias_args(alpha, replicas, steps, k0_fraction, rr_beta);
  if (!op.fixed_point()) {
    throw std::invalid_argument("estimate_bias: operator must declare theta*");
  }
  if (int(theta0.size()) != op.dim()) {
    throw std::invalid_argument("estimate_bias: theta0 dimension mismatch");
  }
  const int d = op.dim();
  const int64_t k0 = int64_t(k0_fraction * double(steps));
  const bool has_rr = rr_beta.has_value();

  std::vector<ReplicaResult> reps(static_cast<size_t>(replicas));
  parallel_for(replicas, threads, [&](int64_t r) {
    RngStream rs = stream.split(uint64_t(r));
    Vec a = theta0, b = theta0;
    Vec ta(d), tb(d), w(d);
    Vec sum_a(d, 0.0), sum_b(d, 0.0);
    try {
      for (int64_t t = 0; t < steps; ++t) {
        if (t >= k0) {
          for (int j = 0; j < d; ++j) {
            sum_a[j] += a[j];
            if (has_rr) sum_b[j] += b[j];
          }
        }
        noise.draw(rs, w);
        op.apply(a, ta);
        for (int j = 0; j < d; ++j) a[j] += alpha * (ta[j] - a[j] + w[j]);
        if (has_rr) {
          op.apply(b, tb);
          for (int j = 0; j < d; ++j) {
            b[j] += 2.0 * alpha * (tb[j] - b[j] + w[j]);
          }
        }
        for (int j = 0; j < d; ++j) {
          if (!(std::abs(a[j]) <= kDivergenceGuard) ||
              (has_rr && !(std::abs(b[j]) <= kDivergenceGuard))) {
            throw DivergenceError(t, "chain diverged at step " +
                                         std::to_string(t));
          }
        }
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), "replica " + std::to_string(r) +
                                          " at alpha " + std::to_string(alpha) +
                                          ": " + e.what());
    }
    const double count = double(steps - k0);
    ReplicaResult res;
    res.ta.resize(d);
    for (int j = 0; j < d; ++j) res.ta[j] = sum_a[j] / count;
    if (has_rr) {
      Vec avg_b(d);
      for (int j = 0; j < d; ++j) avg_b[j] = sum_b[j] / count;
      res.rr = rr_extrapolate(res.ta, avg_b, *rr_beta);
    }
    reps[size_t(r)] = std::move(res);
  });

  BiasEntry entry;
  entry.alpha = alpha;
  entry.replicas = replicas;
  entry.steps = steps;
  reduce_entries(entry, reps, *op.fixed_point(), has_rr);
  return entry;
}

BiasEntry estimate_bias_q(const Mdp& mdp, QMode mode, RewardDist reward,
                          const Vec& q_star, double alpha, int replicas,
                          int64_t steps, double k0_fraction,
                          const RngStream& stream,
                          std::optional<double> rr_beta, const Vec& q0,
                          int threads) {
  check_bias_args(alpha, replicas, steps, k0_fraction, rr_beta);
  if (mode == QMode::GeneralDpr) {
    throw std::invalid_argument(
        "estimate_bias_q: pass Synchronous or Asynchronous; GeneralDpr "
        "samplers are driven through run_q_chain");
  }
  const int d = mdp.n_sa();
  if (int(q_star.size()) != d || int(q0.size()) != d) {
    throw std::invalid_argument("estimate_bias_q: dimension mismatch");
  }
  const int64_t k0 = int64_t(k0_fraction * double(steps));
  const bool has_rr = rr_beta.has_value();
  const double sqrt3 = std::sqrt(3.0);

  std::vector<ReplicaResult> reps(static_cast<size_t>(replicas));
  parallel_for(replicas, threads, [&](int64_t rep) {
    RngStream rs = stream.split(uint64_t(rep));
    Vec qa = q0, qb = q0;
    Vec fa, fb;
    Vec sum_a(d, 0.0), sum_b(d, 0.0);
    try {
      for (int64_t t = 0; t < steps; ++t) {
        if (t >= k0) {
          for (int j = 0; j < d; ++j) {
            sum_a[j] += qa[j];
            if (has_rr) sum_b[j] += qb[j];
          }
        }
        // Draw the step's (D_t, P_t, r_t) once and feed both stepsizes.
        if (mode == QMode::Synchronous) {
          fa = state_max(mdp, qa);
          if (has_rr) fb = state_max(mdp, qb);
          for (int sa = 0; sa < d; ++sa) {
            const int x = rs.sample_categorical(mdp.row(sa));
            const double z = reward == RewardDist::Gaussian
                                 ? rs.standard_normal()
                                 : sqrt3 * (2.0 * rs.uniform01() - 1.0);
            const double r = mdp.r_bar[sa] + mdp.reward_noise_std * z;
            qa[sa] += alpha * (mdp.gamma * fa[x] - qa[sa] + r);
            if (has_rr) {
              qb[sa] += 2.0 * alpha * (mdp.gamma * fb[x] - qb[sa] + r);
            }
          }
        } else {
          const int sa = rs.sample_categorical(mdp.kappa_b);
          const int x = rs.sample_categorical(mdp.row(sa));
          const double z = reward == RewardDist::Gaussian
                               ? rs.standard_normal()
                               : sqrt3 * (2.0 * rs.uniform01() - 1.0);
          const double r = mdp.r_bar[sa] + mdp.reward_noise_std * z;
          double fxa = qa[size_t(mdp.sa_index(x, 0))];
          double fxb = has_rr ? qb[size_t(mdp.sa_index(x, 0))] : 0.0;
          for (int a = 1; a < mdp.n_actions; ++a) {
            fxa = std::max(fxa, qa[size_t(mdp.sa_index(x, a))]);
            if (has_rr) fxb = std::max(fxb, qb[size_t(mdp.sa_index(x, a))]);
          }
          qa[sa] += alpha * (mdp.gamma * fxa - qa[sa] + r);
          if (has_rr) qb[sa] += 2.0 * alpha * (mdp.gamma * fxb - qb[sa] + r);
        }
        for (int j = 0; j < d; ++j) {
          if (!(std::abs(qa[j]) <= kDivergenceGuard) ||
              (has_rr && !(std::abs(qb[j]) <= kDivergenceGuard))) {
            throw DivergenceError(t, "chain diverged at step " +
                                         std::to_string(t));
          }
        }
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step(), "replica " + std::to_string(rep) +
                                          " at alpha " + std::to_string(alpha) +
                                          ": " + e.what());
    }
    const double count = double(steps - k0);
    ReplicaResult res;
    res.ta.resize(d);
    for (int j = 0; j < d; ++j) res.ta[j] = sum_a[j] / count;
    if (has_rr) {
      Vec avg_b(d);
      for (int j = 0; j < d; ++j) avg_b[j] = sum_b[j] / count;
      res.rr = rr_extrapolate(res.ta, avg_b, *rr_beta);
    }
    reps[size_t(rep)] = std::move(res);
  });

  BiasEntry entry;
  entry.alpha = alpha;
  entry.replicas = replicas;
  entry.steps = steps;
  reduce_entries(entry, reps, q_star, has_rr);
  return entry;
}

BiasReport bias_report_from_entries(std::vector<BiasEntry> entries, int dim,
                                    Norm norm, bool has_rr) {
  BiasReport rep;
  rep.dim = dim;
  rep.norm = norm;
  rep.has_rr = has_rr;
  rep.entries = std::move(entries);
  if (rep.entries.size() >= 3) {
    Vec alphas, ta_c, ta_l1, rr_c, rr_l1;
    for (const auto& e : rep.entries) {
      alphas.push_back(e.alpha);
      ta_c.push_back(norm_of(norm, e.ta_bias));
      ta_l1.push_back(l1_norm(e.ta_bias));
      if (has_rr) {
        rr_c.push_back(norm_of(norm, e.rr_bias));
        rr_l1.push_back(l1_norm(e.rr_bias));
      }
    }
    rep.ta_slope_cnorm = fit_loglog_slope(alphas, ta_c);
    rep.ta_slope_l1 = fit_loglog_slope(alphas, ta_l1);
    if (has_rr) {
      rep.rr_slope_cnorm = fit_loglog_slope(alphas, rr_c);
      rep.rr_slope_l1 = fit_loglog_slope(alphas, rr_l1);
    }
  }
  return rep;
}

W2Estimate empirical_w2_1d(std::span<const double> xs,
                           std::span<const double> ys) {
  if (xs.empty() || ys.empty()) {
    throw std::invalid_argument("empirical_w2_1d: empty sample");
  }
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> y(ys.begin(), ys.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  W2Estimate est;
  est.method = W2Method::Quantile1D;
  est.n = x.size();
  est.m = y.size();
  double total = 0.0;
  if (x.size() == y.size()) {
    for (size_t i = 0; i < x.size(); ++i) {
      const double diff = x[i] - y[i];
      total += diff * diff;
    }
    est.value = std::sqrt(total / double(x.size()));
    return est;
  }
  // Unequal sizes: both empirical quantile functions on a mid-point grid.
  const size_t grid = std::max(x.size(), y.size());
  for (size_t i = 0; i < grid; ++i) {
    const double p = (double(i) + 0.5) / double(grid);
    const size_t ix = std::min(size_t(p * double(x.size())), x.size() - 1);
    const size_t iy = std::min(size_t(p * double(y.size())), y.size() - 1);
    const double diff = x[ix] - y[iy];
    total += diff * diff;
  }
  est.value = std::sqrt(total / double(grid));
  return est;
}

double assignment_min_cost(const std::vector<double>& cost, size_t n) {
  if (n == 0 || cost.size() != n * n) {
    throw std::invalid_argument("assignment_min_cost: bad cost matrix");
  }
  // Shortest augmenting path with potentials; 1-based helper arrays.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<size_t> p(n + 1, 0), way(n + 1, 0);
  for (size_t i = 1; i <= n; ++i) {
    p[0] = i;
    size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const size_t i0 = p[j0];
      double delta = inf;
      size_t j1 = 0;
      for (size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0.0;
  for (size_t j = 1; j <= n; ++j) {
    if (p[j] != 0) total += cost[(p[j] - 1) * n + (j - 1)];
  }
  return total;
}

W2Estimate empirical_w2_assignment(std::span<const double> xs,
                                   std::span<const double> ys, size_t n,
                                   int dim, Norm norm, size_t cap) {
  if (n == 0) throw std::invalid_argument("empirical_w2_assignment: empty sample");
  if (dim <= 0 || xs.size() != n * size_t(dim) || ys.size() != n * size_t(dim)) {
    throw std::invalid_argument("empirical_w2_assignment: shape mismatch");
  }
  if (n > cap) {
    throw UnsupportedError(
        "empirical_w2_assignment: n = " + std::to_string(n) +
        " above cap " + std::to_string(cap) +
        "; use the 1-D estimate or subsample");
  }
  std::vector<double> cost(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) {
      const double d = dist_of(norm, {xs.data() + i * dim, size_t(dim)},
                               {ys.data() + j * dim, size_t(dim)});
      cost[i * n + j] = d * d;
    }
  }
  W2Estimate est;
  est.method = W2Method::Assignment;
  est.n = n;
  est.m = n;
  est.value = std::sqrt(assignment_min_cost(cost, n) / double(n));
  return est;
}

double moment_estimate(const Trajectory& traj, const Vec& theta_star,
                       Norm norm, int order, int64_t k0) {
  if (order != 2 && order != 4 && order != 6 && order != 8) {
    throw std::invalid_argument("moment_estimate: order must be 2, 4, 6 or 8");
  }
  const int64_t n = traj.n_recorded();
  if (k0 < 0 || k0 >= n) {
    throw std::invalid_argument("moment_estimate: empty window");
  }
  if (int(theta_star.size()) != traj.dim) {
    throw std::invalid_argument("moment_estimate: theta* dimension mismatch");
  }
  double sum = 0.0;
  for (int64_t i = k0; i < n; ++i) {
    const double d = dist_of(norm, traj.at(i), theta_star);
    sum += std::pow(d, order);
  }
  return sum / double(n - k0);
}

SlopeFit fit_loglog_slope(std::span<const double> alphas,
                          std::span<const double> magnitudes,
                          std::span<const double> weights) {
  const size_t n = alphas.size();
  if (n < 3 || magnitudes.size() != n) {
    throw std::invalid_argument("fit_loglog_slope: need >= 3 (alpha, magnitude) pairs");
  }
  if (!weights.empty() && weights.size() != n) {
    throw std::invalid_argument("fit_loglog_slope: weight length mismatch");
  }
  std::vector<double> lx(n), ly(n), w(n, 1.0);
  for (size_t i = 0; i < n; ++i) {
    if (!(alphas[i] > 0.0) || !(magnitudes[i] > 0.0)) {
      throw std::invalid_argument("fit_loglog_slope: inputs must be positive");
    }
    lx[i] = std::log(alphas[i]);
    ly[i] = std::log(magnitudes[i]);
    if (!weights.empty()) {
      if (!(weights[i] > 0.0)) {
        throw std::invalid_argument("fit_loglog_slope: weights must be positive");
      }
      w[i] = weights[i];
    }
  }
  double wsum = 0.0, xb = 0.0, yb = 0.0;
  for (size_t i = 0; i < n; ++i) {
    wsum += w[i];
    xb += w[i] * lx[i];
    yb += w[i] * ly[i];
  }
  xb /= wsum;
  yb /= wsum;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    sxx += w[i] * (lx[i] - xb) * (lx[i] - xb);
    sxy += w[i] * (lx[i] - xb) * (ly[i] - yb);
  }
  if (sxx <= 0.0) {
    throw std::invalid_argument("fit_loglog_slope: alphas must not coincide");
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  const double intercept = yb - fit.slope * xb;
  double ssr = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double e = ly[i] - intercept - fit.slope * lx[i];
    ssr += w[i] * e * e;
  }
  fit.stderr_ = std::sqrt(ssr / double(n - 2) / sxx);
  return fit;
}

}  // namespace salab
