// C binding: opaque handles over the C++ core, exceptions mapped to status
// codes with a thread-local message.

#include "salab.h"

#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "salab/chain.hpp"
#include "salab/errors.hpp"
#include "salab/estimators.hpp"
#include "salab/experiment.hpp"
#include "salab/mdp.hpp"
#include "salab/operators.hpp"
#include "salab/qlearning.hpp"
#include "salab/rng.hpp"

using namespace salab;

struct salab_rng {
  RngStream impl;
};
struct salab_operator {
  Operator impl;
};
struct salab_noise {
  NoiseSampler impl;
};
struct salab_trajectory {
  Trajectory impl;
};
struct salab_mdp {
  Mdp impl;
};

namespace {

thread_local std::string g_last_error;

salab_status fail(salab_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
salab_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return SALAB_OK;
  } catch (const std::invalid_argument& e) {
    return fail(SALAB_INVALID_ARGUMENT, e.what());
  } catch (const DivergenceError& e) {
    return fail(SALAB_DIVERGENCE, e.what());
  } catch (const NoConvergenceError& e) {
    return fail(SALAB_NO_CONVERGENCE, e.what());
  } catch (const UnsupportedError& e) {
    return fail(SALAB_UNSUPPORTED, e.what());
  } catch (const ParseError& e) {
    return fail(SALAB_PARSE_ERROR, e.what());
  } catch (const IoError& e) {
    return fail(SALAB_IO_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SALAB_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SALAB_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(SALAB_INTERNAL_ERROR, "unknown error");
  }
}

salab_status require(bool cond, const char* what) {
  return cond ? SALAB_OK : fail(SALAB_INVALID_ARGUMENT, what);
}

Norm to_norm(salab_norm n) { return n == SALAB_NORM_LINF ? Norm::LInf : Norm::L2; }
QMode to_mode(salab_q_mode m) {
  return m == SALAB_Q_ASYNCHRONOUS ? QMode::Asynchronous : QMode::Synchronous;
}
RewardDist to_reward(salab_reward_dist r) {
  return r == SALAB_REWARD_UNIFORM ? RewardDist::UniformBounded
                                   : RewardDist::Gaussian;
}

}  // namespace

extern "C" {

const char* salab_last_error(void) { return g_last_error.c_str(); }

const char* salab_version(void) { return "0.1.0"; }

void salab_string_free(char* s) { delete[] s; }

/* ---------- rng ---------- */

salab_rng* salab_rng_create(uint64_t seed) {
  return new (std::nothrow) salab_rng{RngStream(seed)};
}

salab_rng* salab_rng_split(const salab_rng* rng, uint64_t key) {
  if (rng == nullptr) return nullptr;
  return new (std::nothrow) salab_rng{rng->impl.split(key)};
}

void salab_rng_destroy(salab_rng* rng) { delete rng; }

uint64_t salab_rng_counter(const salab_rng* rng) {
  return rng ? rng->impl.counter() : 0;
}

salab_status salab_rng_uniform(salab_rng* rng, double* out) {
  if (auto s = require(rng && out, "null argument")) return s;
  return guarded([&] { *out = rng->impl.uniform01(); });
}

salab_status salab_rng_normal(salab_rng* rng, double* out) {
  if (auto s = require(rng && out, "null argument")) return s;
  return guarded([&] { *out = rng->impl.standard_normal(); });
}

salab_status salab_rng_dirichlet(salab_rng* rng, const double* concentration,
                                 size_t n, double* out) {
  if (auto s = require(rng && concentration && out && n > 0, "null or empty argument")) {
    return s;
  }
  return guarded([&] {
    const Vec v = rng->impl.sample_dirichlet({concentration, n});
    std::memcpy(out, v.data(), n * sizeof(double));
  });
}

salab_status salab_rng_categorical(salab_rng* rng, const double* probs,
                                   size_t n, int32_t* out_index) {
  if (auto s = require(rng && probs && out_index && n > 0, "null or empty argument")) {
    return s;
  }
  return guarded([&] {
    *out_index = int32_t(rng->impl.sample_categorical({probs, n}));
  });
}

/* ---------- operators and noise ---------- */

salab_status salab_operator_linear(const double* a, const double* b, int dim,
                                   salab_norm norm, salab_operator** out) {
  if (auto s = require(a && b && out && dim > 0, "null or empty argument")) return s;
  return guarded([&] {
    Mat A(dim, dim);
    std::memcpy(A.a.data(), a, size_t(dim) * dim * sizeof(double));
    Vec bv(b, b + dim);
    *out = new salab_operator{linear_op(A, bv, to_norm(norm))};
  });
}

salab_status salab_operator_scaled_abs(double b, salab_operator** out) {
  if (auto s = require(out != nullptr, "null out")) return s;
  return guarded([&] { *out = new salab_operator{scaled_abs_op(b)}; });
}

salab_status salab_operator_smooth_curved(salab_operator** out) {
  if (auto s = require(out != nullptr, "null out")) return s;
  return guarded([&] { *out = new salab_operator{smooth_curved_op()}; });
}

salab_status salab_operator_max_affine(const double* mats,
                                       const double* offsets, int n_pieces,
                                       int dim, double scale,
                                       salab_operator** out) {
  if (auto s = require(mats && offsets && out && n_pieces > 0 && dim > 0,
                       "null or empty argument")) {
    return s;
  }
  return guarded([&] {
    std::vector<Mat> ms;
    std::vector<Vec> os;
    for (int p = 0; p < n_pieces; ++p) {
      Mat m(dim, dim);
      std::memcpy(m.a.data(), mats + size_t(p) * dim * dim,
                  size_t(dim) * dim * sizeof(double));
      ms.push_back(std::move(m));
      const double* off = offsets + size_t(p) * dim;
      os.emplace_back(off, off + dim);
    }
    *out = new salab_operator{max_affine_op(ms, os, scale)};
  });
}

void salab_operator_destroy(salab_operator* op) { delete op; }

int salab_operator_dim(const salab_operator* op) {
  return op ? op->impl.dim() : 0;
}

double salab_operator_gamma(const salab_operator* op) {
  return op ? op->impl.contraction_modulus() : 0.0;
}

salab_norm salab_operator_norm(const salab_operator* op) {
  return op && op->impl.norm() == Norm::LInf ? SALAB_NORM_LINF : SALAB_NORM_L2;
}

salab_status salab_operator_fixed_point(const salab_operator* op, double* out) {
  if (auto s = require(op && out, "null argument")) return s;
  if (!op->impl.fixed_point()) {
    return fail(SALAB_UNSUPPORTED, "operator has no declared fixed point");
  }
  std::memcpy(out, op->impl.fixed_point()->data(),
              size_t(op->impl.dim()) * sizeof(double));
  g_last_error.clear();
  return SALAB_OK;
}

salab_status salab_operator_apply(const salab_operator* op, const double* in,
                                  double* out) {
  if (auto s = require(op && in && out, "null argument")) return s;
  return guarded([&] {
    op->impl.apply({in, size_t(op->impl.dim())}, {out, size_t(op->impl.dim())});
  });
}

salab_status salab_noise_create(salab_noise_kind kind, const double* sigma,
                                int dim, salab_noise** out) {
  if (auto s = require(sigma && out && dim > 0, "null or empty argument")) return s;
  return guarded([&] {
    Mat S(dim, dim);
    std::memcpy(S.a.data(), sigma, size_t(dim) * dim * sizeof(double));
    *out = new salab_noise{kind == SALAB_NOISE_RADEMACHER
                               ? NoiseSampler::rademacher(S)
                               : NoiseSampler::gaussian(S)};
  });
}

void salab_noise_destroy(salab_noise* noise) { delete noise; }

/* ---------- chains ---------- */

salab_status salab_sa_step(const salab_operator* op, const double* theta,
                           double alpha, const double* w, double* out) {
  if (auto s = require(op && theta && w && out, "null argument")) return s;
  return guarded([&] {
    const size_t d = size_t(op->impl.dim());
    const Vec r = sa_step({theta, d}, alpha, op->impl, {w, d});
    std::memcpy(out, r.data(), d * sizeof(double));
  });
}

salab_status salab_run_chain(const salab_operator* op,
                             const salab_noise* noise, const double* theta0,
                             double alpha, int64_t steps,
                             int64_t record_stride, salab_rng* rng,
                             salab_trajectory** out) {
  if (auto s = require(op && noise && theta0 && rng && out, "null argument")) return s;
  return guarded([&] {
    Vec t0(theta0, theta0 + op->impl.dim());
    *out = new salab_trajectory{run_chain(t0, alpha, steps, op->impl,
                                          noise->impl, rng->impl,
                                          record_stride)};
  });
}

int64_t salab_trajectory_length(const salab_trajectory* traj) {
  return traj ? traj->impl.n_recorded() : 0;
}

int salab_trajectory_dim(const salab_trajectory* traj) {
  return traj ? traj->impl.dim : 0;
}

double salab_trajectory_alpha(const salab_trajectory* traj) {
  return traj ? traj->impl.alpha : 0.0;
}

salab_status salab_trajectory_get(const salab_trajectory* traj, int64_t index,
                                  double* out) {
  if (auto s = require(traj && out, "null argument")) return s;
  if (index < 0 || index >= traj->impl.n_recorded()) {
    return fail(SALAB_INVALID_ARGUMENT, "trajectory index out of range");
  }
  const auto row = traj->impl.at(index);
  std::memcpy(out, row.data(), row.size() * sizeof(double));
  g_last_error.clear();
  return SALAB_OK;
}

salab_status salab_trajectory_save_csv(const salab_trajectory* traj,
                                       const char* path) {
  if (auto s = require(traj && path, "null argument")) return s;
  return guarded([&] { save_trajectory_csv(traj->impl, path); });
}

void salab_trajectory_destroy(salab_trajectory* traj) { delete traj; }

salab_status salab_coupled_shared_noise(const salab_operator* op,
                                        const salab_noise* noise,
                                        const double* theta0_a,
                                        const double* theta0_b, double alpha,
                                        int64_t steps, salab_rng* rng,
                                        double* out) {
  if (auto s = require(op && noise && theta0_a && theta0_b && rng && out,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    const int d = op->impl.dim();
    const auto sq = coupled_shared_noise(Vec(theta0_a, theta0_a + d),
                                         Vec(theta0_b, theta0_b + d), alpha,
                                         steps, op->impl, noise->impl,
                                         rng->impl);
    std::memcpy(out, sq.data(), sq.size() * sizeof(double));
  });
}

salab_status salab_coupled_stepsize_ratio(const salab_operator* op,
                                          const salab_noise* noise,
                                          double alpha, int k, int64_t steps,
                                          salab_rng* rng, double* out) {
  if (auto s = require(op && noise && rng && out, "null argument")) return s;
  if (!op->impl.fixed_point()) {
    return fail(SALAB_UNSUPPORTED, "operator has no declared fixed point");
  }
  return guarded([&] {
    const auto sq =
        coupled_stepsize_ratio(alpha, k, steps, op->impl, noise->impl,
                               rng->impl, *op->impl.fixed_point());
    std::memcpy(out, sq.data(), sq.size() * sizeof(double));
  });
}

/* ---------- mdp ---------- */

salab_status salab_mdp_create(int n_states, int n_actions, double gamma,
                              double reward_noise_std, const double* P,
                              const double* r_bar, const double* kappa_b,
                              salab_mdp** out) {
  if (auto s = require(P && r_bar && out && n_states > 0 && n_actions > 0,
                       "null or empty argument")) {
    return s;
  }
  return guarded([&] {
    Mdp m;
    m.n_states = n_states;
    m.n_actions = n_actions;
    m.gamma = gamma;
    m.reward_noise_std = reward_noise_std;
    const size_t nsa = size_t(n_states) * n_actions;
    m.P.assign(P, P + nsa * n_states);
    m.r_bar.assign(r_bar, r_bar + nsa);
    if (kappa_b != nullptr) {
      m.kappa_b.assign(kappa_b, kappa_b + nsa);
    } else {
      m.kappa_b.assign(nsa, 1.0 / double(nsa));
    }
    m.validate();
    *out = new salab_mdp{std::move(m)};
  });
}

salab_status salab_mdp_random(salab_rng* rng, int n_states, int n_actions,
                              double gamma, double reward_noise_std,
                              salab_mdp** out) {
  if (auto s = require(rng && out, "null argument")) return s;
  return guarded([&] {
    *out = new salab_mdp{
        random_mdp(rng->impl, n_states, n_actions, gamma, reward_noise_std)};
  });
}

salab_status salab_mdp_make_type_a(const salab_mdp* mdp, salab_mdp** out) {
  if (auto s = require(mdp && out, "null argument")) return s;
  return guarded([&] { *out = new salab_mdp{make_type_a(mdp->impl)}; });
}

salab_status salab_mdp_load(const char* path, salab_mdp** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] { *out = new salab_mdp{load_mdp(path)}; });
}

salab_status salab_mdp_save(const salab_mdp* mdp, const char* path) {
  if (auto s = require(mdp && path, "null argument")) return s;
  return guarded([&] { save_mdp(mdp->impl, path); });
}

void salab_mdp_destroy(salab_mdp* mdp) { delete mdp; }

int salab_mdp_n_states(const salab_mdp* mdp) {
  return mdp ? mdp->impl.n_states : 0;
}

int salab_mdp_n_actions(const salab_mdp* mdp) {
  return mdp ? mdp->impl.n_actions : 0;
}

double salab_mdp_gamma(const salab_mdp* mdp) {
  return mdp ? mdp->impl.gamma : 0.0;
}

salab_status salab_mdp_bellman_apply(const salab_mdp* mdp, const double* q,
                                     const double* d_diag, double* out) {
  if (auto s = require(mdp && q && d_diag && out, "null argument")) return s;
  return guarded([&] {
    const size_t nsa = size_t(mdp->impl.n_sa());
    const Vec r = bellman_apply({q, nsa}, mdp->impl, {d_diag, nsa});
    std::memcpy(out, r.data(), nsa * sizeof(double));
  });
}

salab_status salab_mdp_solve_q_star(const salab_mdp* mdp, double tol,
                                    int64_t max_iters, double* out) {
  if (auto s = require(mdp && out, "null argument")) return s;
  return guarded([&] {
    const Vec q = solve_q_star(mdp->impl, tol, max_iters);
    std::memcpy(out, q.data(), q.size() * sizeof(double));
  });
}

salab_status salab_mdp_classify(const salab_mdp* mdp, const double* q_star,
                                double tie_tol, int32_t* tied, int32_t* rooted,
                                int32_t* out_type, int32_t* out_witness) {
  if (auto s = require(mdp && q_star, "null argument")) return s;
  return guarded([&] {
    const size_t nsa = size_t(mdp->impl.n_sa());
    const auto res = classify(mdp->impl, {q_star, nsa}, tie_tol);
    for (int st = 0; st < mdp->impl.n_states; ++st) {
      if (tied) tied[st] = res.states.tied[st];
      if (rooted) rooted[st] = res.states.rooted[st];
    }
    if (out_type) *out_type = res.type == MdpType::TypeA ? 0 : 1;
    if (out_witness) *out_witness = res.witness ? *res.witness : -1;
  });
}

salab_status salab_mdp_gamma0(const salab_mdp* mdp, const double* d_diag,
                              double* out) {
  if (auto s = require(mdp && d_diag && out, "null argument")) return s;
  return guarded([&] {
    *out = gamma0(mdp->impl, {d_diag, size_t(mdp->impl.n_sa())});
  });
}

salab_status salab_run_q_chain(const salab_mdp* mdp, salab_q_mode mode,
                               salab_reward_dist reward, const double* q0,
                               double alpha, int64_t steps,
                               int64_t record_stride, salab_rng* rng,
                               salab_trajectory** out) {
  if (auto s = require(mdp && q0 && rng && out, "null argument")) return s;
  return guarded([&] {
    Vec q(q0, q0 + mdp->impl.n_sa());
    *out = new salab_trajectory{run_q_chain(q, alpha, steps, mdp->impl,
                                            to_mode(mode), rng->impl,
                                            record_stride, to_reward(reward))};
  });
}

/* ---------- estimators ---------- */

salab_status salab_tail_average(const salab_trajectory* traj, int64_t k0,
                                double* out) {
  if (auto s = require(traj && out, "null argument")) return s;
  return guarded([&] {
    const Vec avg = tail_average(traj->impl, k0);
    std::memcpy(out, avg.data(), avg.size() * sizeof(double));
  });
}

salab_status salab_rr_extrapolate(const double* avg_alpha,
                                  const double* avg_2alpha, int dim,
                                  double beta, double* out) {
  if (auto s = require(avg_alpha && avg_2alpha && out && dim > 0, "null argument")) {
    return s;
  }
  return guarded([&] {
    const Vec r = rr_extrapolate(Vec(avg_alpha, avg_alpha + dim),
                                 Vec(avg_2alpha, avg_2alpha + dim), beta);
    std::memcpy(out, r.data(), r.size() * sizeof(double));
  });
}

salab_status salab_estimate_bias(const salab_operator* op,
                                 const salab_noise* noise, double alpha,
                                 const double* theta0, int replicas,
                                 int64_t steps, double k0_fraction,
                                 double rr_beta, const salab_rng* rng,
                                 int threads, double* ta_bias,
                                 double* ta_stderr, double* rr_bias,
                                 double* rr_stderr) {
  if (auto s = require(op && noise && theta0 && rng && ta_bias && ta_stderr,
                       "null argument")) {
    return s;
  }
  const bool with_rr = rr_beta > 0.0;
  if (with_rr && (rr_bias == nullptr || rr_stderr == nullptr)) {
    return fail(SALAB_INVALID_ARGUMENT, "rr outputs required when rr_beta > 0");
  }
  return guarded([&] {
    const int d = op->impl.dim();
    const auto e = estimate_bias(
        op->impl, noise->impl, alpha, replicas, steps, k0_fraction, rng->impl,
        with_rr ? std::optional<double>(rr_beta) : std::nullopt,
        Vec(theta0, theta0 + d), threads);
    std::memcpy(ta_bias, e.ta_bias.data(), size_t(d) * sizeof(double));
    std::memcpy(ta_stderr, e.ta_stderr.data(), size_t(d) * sizeof(double));
    if (with_rr) {
      std::memcpy(rr_bias, e.rr_bias.data(), size_t(d) * sizeof(double));
      std::memcpy(rr_stderr, e.rr_stderr.data(), size_t(d) * sizeof(double));
    }
  });
}

salab_status salab_estimate_bias_q(const salab_mdp* mdp, salab_q_mode mode,
                                   salab_reward_dist reward,
                                   const double* q_star, double alpha,
                                   const double* q0, int replicas,
                                   int64_t steps, double k0_fraction,
                                   double rr_beta, const salab_rng* rng,
                                   int threads, double* ta_bias,
                                   double* ta_stderr, double* rr_bias,
                                   double* rr_stderr) {
  if (auto s = require(mdp && q_star && q0 && rng && ta_bias && ta_stderr,
                       "null argument")) {
    return s;
  }
  const bool with_rr = rr_beta > 0.0;
  if (with_rr && (rr_bias == nullptr || rr_stderr == nullptr)) {
    return fail(SALAB_INVALID_ARGUMENT, "rr outputs required when rr_beta > 0");
  }
  return guarded([&] {
    const int d = mdp->impl.n_sa();
    const auto e = estimate_bias_q(
        mdp->impl, to_mode(mode), to_reward(reward), Vec(q_star, q_star + d),
        alpha, replicas, steps, k0_fraction, rng->impl,
        with_rr ? std::optional<double>(rr_beta) : std::nullopt,
        Vec(q0, q0 + d), threads);
    std::memcpy(ta_bias, e.ta_bias.data(), size_t(d) * sizeof(double));
    std::memcpy(ta_stderr, e.ta_stderr.data(), size_t(d) * sizeof(double));
    if (with_rr) {
      std::memcpy(rr_bias, e.rr_bias.data(), size_t(d) * sizeof(double));
      std::memcpy(rr_stderr, e.rr_stderr.data(), size_t(d) * sizeof(double));
    }
  });
}

salab_status salab_w2_1d(const double* xs, size_t nx, const double* ys,
                         size_t ny, double* out) {
  if (auto s = require(xs && ys && out, "null argument")) return s;
  return guarded([&] { *out = empirical_w2_1d({xs, nx}, {ys, ny}).value; });
}

salab_status salab_w2_assignment(const double* xs, const double* ys, size_t n,
                                 int dim, salab_norm norm, size_t cap,
                                 double* out) {
  if (auto s = require(xs && ys && out, "null argument")) return s;
  return guarded([&] {
    *out = empirical_w2_assignment({xs, n * size_t(dim)},
                                   {ys, n * size_t(dim)}, n, dim,
                                   to_norm(norm), cap)
               .value;
  });
}

salab_status salab_moment_estimate(const salab_trajectory* traj,
                                   const double* theta_star, salab_norm norm,
                                   int order, int64_t k0, double* out) {
  if (auto s = require(traj && theta_star && out, "null argument")) return s;
  return guarded([&] {
    *out = moment_estimate(traj->impl,
                           Vec(theta_star, theta_star + traj->impl.dim),
                           to_norm(norm), order, k0);
  });
}

salab_status salab_fit_loglog_slope(const double* alphas,
                                    const double* magnitudes, size_t n,
                                    const double* weights_or_null,
                                    double* out_slope, double* out_stderr) {
  if (auto s = require(alphas && magnitudes && out_slope && out_stderr,
                       "null argument")) {
    return s;
  }
  return guarded([&] {
    std::span<const double> w =
        weights_or_null ? std::span<const double>{weights_or_null, n}
                        : std::span<const double>{};
    const auto fit = fit_loglog_slope({alphas, n}, {magnitudes, n}, w);
    *out_slope = fit.slope;
    *out_stderr = fit.stderr_;
  });
}

/* ---------- experiments ---------- */

salab_status salab_run_preset(const char* name, uint64_t seed,
                              const char* out_dir, int threads) {
  if (auto s = require(name != nullptr, "null preset name")) return s;
  return guarded([&] {
    ExperimentConfig cfg = preset_config(name);
    cfg.seed = seed;
    if (out_dir != nullptr) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    run_experiment(cfg);
  });
}

salab_status salab_run_config_file(const char* path, int override_seed,
                                   uint64_t seed, const char* out_dir,
                                   int threads) {
  if (auto s = require(path != nullptr, "null config path")) return s;
  return guarded([&] {
    ExperimentConfig cfg = load_config_file(path);
    if (override_seed) cfg.seed = seed;
    if (out_dir != nullptr) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    run_experiment(cfg);
  });
}

int salab_preset_count(void) { return int(preset_names().size()); }

const char* salab_preset_name(int index) {
  static const std::vector<std::string> names = preset_names();
  if (index < 0 || index >= int(names.size())) return nullptr;
  return names[size_t(index)].c_str();
}

salab_status salab_describe_mdp(const char* path, char** out) {
  if (auto s = require(path && out, "null argument")) return s;
  return guarded([&] {
    const Mdp m = load_mdp(path);
    const std::string text = describe_mdp_text(m);
    char* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
  });
}

}  // extern "C"
