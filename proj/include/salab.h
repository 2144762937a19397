/* salab -- constant-stepsize stochastic approximation laboratory.
 *
 * C interface to the core library: opaque handles, integer status codes,
 * and a thread-local message for the last failing call. All functions
 * return salab_status unless stated otherwise; out-parameters are written
 * only on SALAB_OK.
 */
#ifndef SALAB_H
#define SALAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum salab_status {
  SALAB_OK = 0,
  SALAB_INVALID_ARGUMENT = 1,
  SALAB_DIVERGENCE = 2,
  SALAB_NO_CONVERGENCE = 3,
  SALAB_UNSUPPORTED = 4,
  SALAB_PARSE_ERROR = 5,
  SALAB_IO_ERROR = 6,
  SALAB_INTERNAL_ERROR = 7
} salab_status;

/* Message describing the last failure on this thread; empty string if none. */
const char* salab_last_error(void);

const char* salab_version(void);

/* Frees strings returned through char** out-parameters. */
void salab_string_free(char* s);

typedef enum salab_norm { SALAB_NORM_L2 = 0, SALAB_NORM_LINF = 1 } salab_norm;
typedef enum salab_noise_kind {
  SALAB_NOISE_GAUSSIAN = 0,
  SALAB_NOISE_RADEMACHER = 1
} salab_noise_kind;
typedef enum salab_q_mode {
  SALAB_Q_SYNCHRONOUS = 0,
  SALAB_Q_ASYNCHRONOUS = 1
} salab_q_mode;
typedef enum salab_reward_dist {
  SALAB_REWARD_GAUSSIAN = 0,
  SALAB_REWARD_UNIFORM = 1
} salab_reward_dist;

/* ---------- random streams ---------- */

typedef struct salab_rng salab_rng;

salab_rng* salab_rng_create(uint64_t seed);
/* Child stream with `key` appended to the split path; parent untouched. */
salab_rng* salab_rng_split(const salab_rng* rng, uint64_t key);
void salab_rng_destroy(salab_rng* rng);
uint64_t salab_rng_counter(const salab_rng* rng);

salab_status salab_rng_uniform(salab_rng* rng, double* out);
salab_status salab_rng_normal(salab_rng* rng, double* out);
salab_status salab_rng_dirichlet(salab_rng* rng, const double* concentration,
                                 size_t n, double* out);
salab_status salab_rng_categorical(salab_rng* rng, const double* probs,
                                   size_t n, int32_t* out_index);

/* ---------- contractive operators and noise ---------- */

typedef struct salab_operator salab_operator;
typedef struct salab_noise salab_noise;

/* T(x) = A x + b; A row-major dim x dim. Fails if ||A|| >= 1 in `norm`. */
salab_status salab_operator_linear(const double* a, const double* b, int dim,
                                   salab_norm norm, salab_operator** out);
/* T(x) = -|x|/2 - b (1-D nonsmooth example). */
salab_status salab_operator_scaled_abs(double b, salab_operator** out);
/* T(x) = 0.4 x + 0.2 tanh^2(x) (smooth 1-D baseline). */
salab_status salab_operator_smooth_curved(salab_operator** out);
/* Componentwise max over `n_pieces` affine maps, scaled by `scale`.
 * mats: n_pieces blocks of dim*dim row-major; offsets: n_pieces blocks of dim. */
salab_status salab_operator_max_affine(const double* mats,
                                       const double* offsets, int n_pieces,
                                       int dim, double scale,
                                       salab_operator** out);
void salab_operator_destroy(salab_operator* op);

int salab_operator_dim(const salab_operator* op);
double salab_operator_gamma(const salab_operator* op);
salab_norm salab_operator_norm(const salab_operator* op);
/* Writes theta* into out[dim]; SALAB_UNSUPPORTED if not declared. */
salab_status salab_operator_fixed_point(const salab_operator* op, double* out);
salab_status salab_operator_apply(const salab_operator* op, const double* in,
                                  double* out);

/* sigma: dim x dim covariance, row-major. Rademacher uses its diagonal. */
salab_status salab_noise_create(salab_noise_kind kind, const double* sigma,
                                int dim, salab_noise** out);
void salab_noise_destroy(salab_noise* noise);

/* ---------- chains and couplings ---------- */

typedef struct salab_trajectory salab_trajectory;

/* theta' = theta + alpha (T(theta) - theta + w). */
salab_status salab_sa_step(const salab_operator* op, const double* theta,
                           double alpha, const double* w, double* out);

salab_status salab_run_chain(const salab_operator* op,
                             const salab_noise* noise, const double* theta0,
                             double alpha, int64_t steps,
                             int64_t record_stride, salab_rng* rng,
                             salab_trajectory** out);

int64_t salab_trajectory_length(const salab_trajectory* traj);
int salab_trajectory_dim(const salab_trajectory* traj);
double salab_trajectory_alpha(const salab_trajectory* traj);
salab_status salab_trajectory_get(const salab_trajectory* traj, int64_t index,
                                  double* out);
/* CSV with columns step,component_0,...,component_{d-1}. */
salab_status salab_trajectory_save_csv(const salab_trajectory* traj,
                                       const char* path);
void salab_trajectory_destroy(salab_trajectory* traj);

/* Squared c-norm distances of two chains sharing the noise; out has
 * steps+1 entries (index 0 = initial distance). */
salab_status salab_coupled_shared_noise(const salab_operator* op,
                                        const salab_noise* noise,
                                        const double* theta0_a,
                                        const double* theta0_b, double alpha,
                                        int64_t steps, salab_rng* rng,
                                        double* out);

/* Squared rescaled distances ||Y_t^(alpha) - Y_{kt}^(alpha/k)||_c^2 under
 * the aggregated-noise coupling; Gaussian noise required. out: steps+1. */
salab_status salab_coupled_stepsize_ratio(const salab_operator* op,
                                          const salab_noise* noise,
                                          double alpha, int k, int64_t steps,
                                          salab_rng* rng, double* out);

/* ---------- MDPs and Q-learning ---------- */

typedef struct salab_mdp salab_mdp;

/* P: (n_states*n_actions) x n_states row-major; r_bar, kappa_b length
 * n_states*n_actions. kappa_b == NULL means uniform. */
salab_status salab_mdp_create(int n_states, int n_actions, double gamma,
                              double reward_noise_std, const double* P,
                              const double* r_bar, const double* kappa_b,
                              salab_mdp** out);
salab_status salab_mdp_random(salab_rng* rng, int n_states, int n_actions,
                              double gamma, double reward_noise_std,
                              salab_mdp** out);
salab_status salab_mdp_make_type_a(const salab_mdp* mdp, salab_mdp** out);
salab_status salab_mdp_load(const char* path, salab_mdp** out);
salab_status salab_mdp_save(const salab_mdp* mdp, const char* path);
void salab_mdp_destroy(salab_mdp* mdp);

int salab_mdp_n_states(const salab_mdp* mdp);
int salab_mdp_n_actions(const salab_mdp* mdp);
double salab_mdp_gamma(const salab_mdp* mdp);

/* q must have n_states*n_actions entries. */
salab_status salab_mdp_bellman_apply(const salab_mdp* mdp, const double* q,
                                     const double* d_diag, double* out);
salab_status salab_mdp_solve_q_star(const salab_mdp* mdp, double tol,
                                    int64_t max_iters, double* out);
/* tied/rooted: per-state 0/1 flags; out_type: 0 = TypeA, 1 = TypeB;
 * out_witness: tied non-rooted state index, or -1. Any out pointer may be
 * NULL when that piece is not needed. */
salab_status salab_mdp_classify(const salab_mdp* mdp, const double* q_star,
                                double tie_tol, int32_t* tied, int32_t* rooted,
                                int32_t* out_type, int32_t* out_witness);
salab_status salab_mdp_gamma0(const salab_mdp* mdp, const double* d_diag,
                              double* out);

salab_status salab_run_q_chain(const salab_mdp* mdp, salab_q_mode mode,
                               salab_reward_dist reward, const double* q0,
                               double alpha, int64_t steps,
                               int64_t record_stride, salab_rng* rng,
                               salab_trajectory** out);

/* ---------- estimators ---------- */

salab_status salab_tail_average(const salab_trajectory* traj, int64_t k0,
                                double* out);
salab_status salab_rr_extrapolate(const double* avg_alpha,
                                  const double* avg_2alpha, int dim,
                                  double beta, double* out);

/* Tail-averaged bias against theta* across `replicas` independent chains.
 * rr_beta > 0 adds the RR estimate from a coupled 2*alpha chain; pass 0 to
 * skip (rr_bias/rr_stderr may then be NULL). Each out array has op dim. */
salab_status salab_estimate_bias(const salab_operator* op,
                                 const salab_noise* noise, double alpha,
                                 const double* theta0, int replicas,
                                 int64_t steps, double k0_fraction,
                                 double rr_beta, const salab_rng* rng,
                                 int threads, double* ta_bias,
                                 double* ta_stderr, double* rr_bias,
                                 double* rr_stderr);
salab_status salab_estimate_bias_q(const salab_mdp* mdp, salab_q_mode mode,
                                   salab_reward_dist reward,
                                   const double* q_star, double alpha,
                                   const double* q0, int replicas,
                                   int64_t steps, double k0_fraction,
                                   double rr_beta, const salab_rng* rng,
                                   int threads, double* ta_bias,
                                   double* ta_stderr, double* rr_bias,
                                   double* rr_stderr);

salab_status salab_w2_1d(const double* xs, size_t nx, const double* ys,
                         size_t ny, double* out);
salab_status salab_w2_assignment(const double* xs, const double* ys, size_t n,
                                 int dim, salab_norm norm, size_t cap,
                                 double* out);

salab_status salab_moment_estimate(const salab_trajectory* traj,
                                   const double* theta_star, salab_norm norm,
                                   int order, int64_t k0, double* out);

salab_status salab_fit_loglog_slope(const double* alphas,
                                    const double* magnitudes, size_t n,
                                    const double* weights_or_null,
                                    double* out_slope, double* out_stderr);

/* ---------- experiments ---------- */

/* Runs a named preset; seed/out_dir/threads override the preset defaults
 * (pass out_dir = NULL to keep the preset's directory). */
salab_status salab_run_preset(const char* name, uint64_t seed,
                              const char* out_dir, int threads);
/* Runs a JSON config file (or a manifest.json from a previous run). Any of
 * seed < 0 semantics are not used: pass override flags explicitly. */
salab_status salab_run_config_file(const char* path, int override_seed,
                                   uint64_t seed, const char* out_dir,
                                   int threads);

int salab_preset_count(void);
const char* salab_preset_name(int index);

/* Classification report for an MDP file; *out is heap-allocated, release
 * with salab_string_free. */
salab_status salab_describe_mdp(const char* path, char** out);

#ifdef __cplusplus
}
#endif

#endif /* SALAB_H */
