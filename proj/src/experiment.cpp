#include "salab/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "salab/parallel.hpp"

namespace salab {

namespace {

ExperimentKind kind_from_string(const std::string& s) {
  if (s == "bias-sweep") return ExperimentKind::BiasSweep;
  if (s == "rr-compare") return ExperimentKind::RrCompare;
  if (s == "q-experiment") return ExperimentKind::QExperiment;
  if (s == "coupling") return ExperimentKind::Coupling;
  if (s == "w2-convergence") return ExperimentKind::W2Convergence;
  throw ParseError("config: unknown kind '" + s + "'");
}

std::string kind_to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::BiasSweep: return "bias-sweep";
    case ExperimentKind::RrCompare: return "rr-compare";
    case ExperimentKind::QExperiment: return "q-experiment";
    case ExperimentKind::Coupling: return "coupling";
    case ExperimentKind::W2Convergence: return "w2-convergence";
  }
  return "?";
}

const Json& require_field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) {
    throw ParseError(std::string("config: missing field '") + name + "'");
  }
  return *it;
}

double as_number(const Json& j, const char* name) {
  if (!j.is_number()) {
    throw ParseError(std::string("config: field '") + name + "' must be a number");
  }
  return j.get<double>();
}

Vec as_vec(const Json& j, const char* name) {
  if (j.is_number()) return Vec{j.get<double>()};
  if (!j.is_array()) {
    throw ParseError(std::string("config: field '") + name +
                     "' must be a number or array");
  }
  Vec out;
  for (const auto& v : j) out.push_back(as_number(v, name));
  return out;
}

Mat as_mat(const Json& j, const char* name) {
  if (!j.is_array() || j.empty()) {
    throw ParseError(std::string("config: field '") + name +
                     "' must be a nonempty matrix (array of rows)");
  }
  const int rows = int(j.size());
  const int cols = int(j[0].size());
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!j[i].is_array() || int(j[i].size()) != cols) {
      throw ParseError(std::string("config: field '") + name +
                       "' has ragged rows");
    }
    for (int c = 0; c < cols; ++c) m(i, c) = as_number(j[i][c], name);
  }
  return m;
}

}  // namespace

Json ExperimentConfig::to_json() const {
  Json j;
  j["kind"] = kind_to_string(kind);
  j["dynamic"] = dynamic;
  j["alphas"] = alphas;
  j["steps"] = steps;
  j["replicas"] = replicas;
  j["burn_in_fraction"] = burn_in_fraction;
  j["beta"] = beta;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["threads"] = threads;
  if (kind == ExperimentKind::Coupling) {
    j["coupling"] = Json{{"mode", coupling_mode},
                         {"k", coupling_k},
                         {"theta0_a", theta0_a},
                         {"theta0_b", theta0_b}};
  }
  if (kind == ExperimentKind::W2Convergence) {
    j["w2"] = Json{{"checkpoint_stride", checkpoint_stride},
                   {"reference_factor", reference_factor}};
  }
  return j;
}

ExperimentConfig parse_config(const Json& root) {
  const Json& j = root.contains("config") && root["config"].is_object()
                      ? root["config"]
                      : root;
  ExperimentConfig c;
  c.kind = kind_from_string(require_field(j, "kind").get<std::string>());
  c.dynamic = require_field(j, "dynamic");
  if (!c.dynamic.is_object()) throw ParseError("config: 'dynamic' must be an object");
  for (const auto& a : require_field(j, "alphas")) {
    const double alpha = as_number(a, "alphas");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ParseError("config: every alpha must lie in (0,1)");
    }
    c.alphas.push_back(alpha);
  }
  if (c.alphas.empty()) throw ParseError("config: 'alphas' must be nonempty");
  c.steps = require_field(j, "steps").get<int64_t>();
  if (c.steps < 1) throw ParseError("config: 'steps' must be >= 1");
  c.replicas = require_field(j, "replicas").get<int>();
  if (c.replicas < 1) throw ParseError("config: 'replicas' must be >= 1");
  c.burn_in_fraction = j.value("burn_in_fraction", 0.5);
  if (!(c.burn_in_fraction >= 0.0 && c.burn_in_fraction < 1.0)) {
    throw ParseError("config: 'burn_in_fraction' must lie in [0,1)");
  }
  c.beta = j.value("beta", 0.5);
  if (!(c.beta > 0.0)) throw ParseError("config: 'beta' must be positive");
  c.seed = j.value("seed", uint64_t(0));
  c.out_dir = j.value("out_dir", std::string("salab-out"));
  c.threads = j.value("threads", 1);
  if (c.threads < 1) c.threads = 1;

  if (c.kind == ExperimentKind::Coupling) {
    const Json& cj = require_field(j, "coupling");
    c.coupling_mode = cj.value("mode", std::string("shared"));
    if (c.coupling_mode != "shared" && c.coupling_mode != "stepsize-ratio") {
      throw ParseError("config: coupling.mode must be 'shared' or 'stepsize-ratio'");
    }
    c.coupling_k = cj.value("k", 2);
    if (c.coupling_k < 1) throw ParseError("config: coupling.k must be >= 1");
    if (cj.contains("theta0_a")) c.theta0_a = as_vec(cj["theta0_a"], "coupling.theta0_a");
    if (cj.contains("theta0_b")) c.theta0_b = as_vec(cj["theta0_b"], "coupling.theta0_b");
  }
  if (c.kind == ExperimentKind::W2Convergence) {
    const Json& wj = require_field(j, "w2");
    c.checkpoint_stride = require_field(wj, "checkpoint_stride").get<int64_t>();
    if (c.checkpoint_stride < 1) {
      throw ParseError("config: w2.checkpoint_stride must be >= 1");
    }
    c.reference_factor = wj.value("reference_factor", int64_t(10));
    if (c.reference_factor < 2) {
      throw ParseError("config: w2.reference_factor must be >= 2");
    }
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("config: cannot open " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config: " + path + ": " + e.what());
  }
  return parse_config(j);
}

namespace {

// Dirichlet(1)-row MDP sampled once from the documented recipe; see the
// fig5b/fig5c comment below for why the instance is pinned.
constexpr const char* kFig5MdpFixture =
    "3 2 0.90000000000000002 0.54772255750516607\n"
    "0.47427176677245192 0.057065187002470694 0.46866304622507737\n"
    "0.071345877086440052 0.92068831025402165 0.007965812659538345\n"
    "0.05239383364079158 0.47934900048026763 0.46825716587894084\n"
    "0.43166601156893136 0.31029892891335209 0.2580350595177166\n"
    "0.27014512442299582 0.22032334574892401 0.50953152982808014\n"
    "0.087930814850115446 0.82160851253837819 0.090460672611506351\n"
    "0.012195132772962136 0.4708777562982559 0.050121505803224164 "
    "0.92368956702408078 0.13158417794427024 0.78851955451979994\n"
    "0.16666666666666666 0.16666666666666666 0.16666666666666666 "
    "0.16666666666666666 0.16666666666666666 0.16666666666666666\n";

Json operator_dynamic(const char* name, Json extra, double sigma, Vec theta0) {
  Json d;
  d["type"] = "operator";
  d["name"] = name;
  for (auto& [k, v] : extra.items()) d[k] = v;
  d["noise"] = Json{{"kind", "gaussian"}, {"sigma", sigma}};
  d["theta0"] = theta0;
  return d;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fig5a", "fig5b", "fig5c", "coupling-shared", "coupling-ratio",
          "w2-decay"};
}

ExperimentConfig preset_config(const std::string& name) {
  Json j;
  if (name == "fig5a") {
    // Nonsmooth 1-D example, theta0 = 1, TA vs RR over four stepsizes.
    j["kind"] = "rr-compare";
    j["dynamic"] = operator_dynamic("scaled-abs", Json{{"b", 0.0}}, 1.0, {1.0});
    j["alphas"] = {0.05, 0.1, 0.2, 0.4};
    j["steps"] = 200000;
    j["replicas"] = 64;
    j["burn_in_fraction"] = 0.5;
    j["beta"] = 0.5;
  } else if (name == "fig5b" || name == "fig5c") {
    // 3-state/2-action MDP with Dirichlet(1) rows, uniform rewards and
    // Gaussian reward noise (variance 0.3), pinned here as a fixture so the
    // instance is stable under --seed; the seed drives only the chains.
    // fig5b ties state 0 (Type A), fig5c keeps the raw draw (Type B).
    // The draw has healthy per-state action gaps (min 0.59 in q*), which
    // keeps the Type-B maximization bias negligible at these stepsizes;
    // near-tied draws need far smaller alpha to reach that regime.
    j["kind"] = "q-experiment";
    j["dynamic"] = Json{{"type", "mdp"},
                        {"mdp", Json{{"inline", kFig5MdpFixture}}},
                        {"type_a", name == "fig5b"},
                        {"mode", "synchronous"},
                        {"reward_dist", "gaussian"},
                        {"q0", 1.0}};
    j["alphas"] = {0.02, 0.04, 0.08, 0.16};
    j["steps"] = 100000;
    j["replicas"] = 64;
    j["burn_in_fraction"] = 0.5;
    j["beta"] = 0.5;
  } else if (name == "coupling-shared") {
    j["kind"] = "coupling";
    j["dynamic"] = operator_dynamic("scaled-abs", Json{{"b", 0.0}}, 1.0, {0.0});
    j["alphas"] = {0.1};
    j["steps"] = 500;
    j["replicas"] = 200;
    j["coupling"] =
        Json{{"mode", "shared"}, {"theta0_a", {1.0}}, {"theta0_b", {-1.0}}};
  } else if (name == "coupling-ratio") {
    j["kind"] = "coupling";
    j["dynamic"] = operator_dynamic("scaled-abs", Json{{"b", 0.0}}, 1.0, {0.0});
    j["alphas"] = {0.4, 0.2, 0.1, 0.05};
    j["steps"] = 4000;
    j["replicas"] = 200;
    j["burn_in_fraction"] = 0.5;
    j["coupling"] = Json{{"mode", "stepsize-ratio"}, {"k", 2}};
  } else if (name == "w2-decay") {
    j["kind"] = "w2-convergence";
    j["dynamic"] = operator_dynamic("scaled-abs", Json{{"b", 0.0}}, 1.0, {1.0});
    j["alphas"] = {0.1};
    j["steps"] = 500;
    j["replicas"] = 400;
    j["w2"] = Json{{"checkpoint_stride", 20}, {"reference_factor", 10}};
  } else {
    throw ParseError("unknown preset '" + name + "'");
  }
  j["out_dir"] = "salab-out-" + name;
  return parse_config(j);
}

BuiltDynamic build_dynamic(const ExperimentConfig& cfg, const RngStream& master) {
  const Json& d = cfg.dynamic;
  const std::string type = require_field(d, "type").get<std::string>();
  BuiltDynamic built;
  if (type == "operator") {
    const std::string name = require_field(d, "name").get<std::string>();
    if (name == "scaled-abs") {
      built.op = scaled_abs_op(d.value("b", 0.0));
    } else if (name == "smooth-curved") {
      built.op = smooth_curved_op();
    } else if (name == "linear") {
      const Mat a = as_mat(require_field(d, "a"), "dynamic.a");
      const Vec b = as_vec(require_field(d, "b"), "dynamic.b");
      const std::string nrm = d.value("norm", std::string("l2"));
      built.op = linear_op(a, b, nrm == "linf" ? Norm::LInf : Norm::L2);
    } else if (name == "max-affine") {
      std::vector<Mat> mats;
      std::vector<Vec> offs;
      for (const auto& piece : require_field(d, "pieces")) {
        mats.push_back(as_mat(require_field(piece, "a"), "pieces.a"));
        offs.push_back(as_vec(require_field(piece, "b"), "pieces.b"));
      }
      built.op = max_affine_op(mats, offs, d.value("scale", 1.0));
    } else {
      throw ParseError("config: unknown operator '" + name + "'");
    }
    const int dim = built.op->dim();
    const Json& nj = require_field(d, "noise");
    const std::string kind = nj.value("kind", std::string("gaussian"));
    const Json& sig = require_field(nj, "sigma");
    Mat sigma;
    if (sig.is_number()) {
      sigma = Mat(dim, dim);
      for (int i = 0; i < dim; ++i) sigma(i, i) = sig.get<double>();
    } else {
      sigma = as_mat(sig, "noise.sigma");
    }
    if (kind == "gaussian") {
      built.noise = NoiseSampler::gaussian(sigma);
    } else if (kind == "rademacher") {
      built.noise = NoiseSampler::rademacher(sigma);
    } else {
      throw ParseError("config: unknown noise kind '" + kind + "'");
    }
    Vec theta0 = as_vec(d.value("theta0", Json(0.0)), "dynamic.theta0");
    if (int(theta0.size()) == 1 && dim > 1) theta0.assign(dim, theta0[0]);
    if (int(theta0.size()) != dim) {
      throw ParseError("config: theta0 dimension mismatch");
    }
    built.theta0 = std::move(theta0);
  } else if (type == "mdp") {
    built.is_mdp = true;
    const Json& mj = require_field(d, "mdp");
    if (mj.contains("random")) {
      const Json& rj = mj["random"];
      RngStream ms = master.split(1000);
      built.mdp = random_mdp(ms, require_field(rj, "states").get<int>(),
                             require_field(rj, "actions").get<int>(),
                             rj.value("gamma", 0.9),
                             rj.value("reward_noise_std", 0.5477225575051661));
    } else if (mj.contains("file")) {
      built.mdp = load_mdp(mj["file"].get<std::string>());
    } else if (mj.contains("inline")) {
      built.mdp = mdp_from_string(mj["inline"].get<std::string>());
    } else {
      throw ParseError("config: dynamic.mdp needs 'random', 'file' or 'inline'");
    }
    if (d.value("type_a", false)) built.mdp = make_type_a(*built.mdp);
    const std::string mode = d.value("mode", std::string("synchronous"));
    if (mode == "synchronous") {
      built.mode = QMode::Synchronous;
    } else if (mode == "asynchronous") {
      built.mode = QMode::Asynchronous;
    } else {
      throw ParseError("config: unknown q mode '" + mode + "'");
    }
    const std::string rd = d.value("reward_dist", std::string("gaussian"));
    if (rd == "gaussian") {
      built.reward = RewardDist::Gaussian;
    } else if (rd == "uniform") {
      built.reward = RewardDist::UniformBounded;
    } else if (rd == "gaussian-clipped") {
      built.reward = RewardDist::GaussianClipped;
    } else {
      throw ParseError("config: unknown reward_dist '" + rd + "'");
    }
    Vec q0 = as_vec(d.value("q0", Json(0.0)), "dynamic.q0");
    if (int(q0.size()) == 1) q0.assign(built.mdp->n_sa(), q0[0]);
    if (int(q0.size()) != built.mdp->n_sa()) {
      throw ParseError("config: q0 dimension mismatch");
    }
    built.q0 = std::move(q0);
    built.q_star = solve_q_star(*built.mdp, 1e-12);
  } else {
    throw ParseError("config: dynamic.type must be 'operator' or 'mdp'");
  }
  return built;
}

namespace {

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& content, std::vector<std::string>& files) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw IoError("cannot open output file " + name);
  f << content;
  if (!f) throw IoError("write failed on " + name);
  files.push_back(name);
}

std::string bias_csv(const BiasReport& report) {
  std::ostringstream os;
  os << "alpha,estimator,component,bias,stderr\n";
  for (const auto& e : report.entries) {
    for (int j = 0; j < report.dim; ++j) {
      os << format_full(e.alpha) << ",TA," << j << ',' << format_full(e.ta_bias[j]) << ','
         << format_full(e.ta_stderr[j]) << '\n';
    }
    if (report.has_rr) {
      for (int j = 0; j < report.dim; ++j) {
        os << format_full(e.alpha) << ",RR," << j << ',' << format_full(e.rr_bias[j])
           << ',' << format_full(e.rr_stderr[j]) << '\n';
      }
    }
  }
  return os.str();
}

Json slope_json(const BiasReport& report) {
  Json j;
  j["norm"] = report.norm == Norm::LInf ? "linf" : "l2";
  Json alphas = Json::array();
  Json ta_c = Json::array(), ta_l1 = Json::array();
  Json rr_c = Json::array(), rr_l1 = Json::array();
  for (const auto& e : report.entries) {
    alphas.push_back(e.alpha);
    ta_c.push_back(norm_of(report.norm, e.ta_bias));
    ta_l1.push_back(l1_norm(e.ta_bias));
    if (report.has_rr) {
      rr_c.push_back(norm_of(report.norm, e.rr_bias));
      rr_l1.push_back(l1_norm(e.rr_bias));
    }
  }
  j["alphas"] = alphas;
  j["ta"] = Json{{"magnitude_cnorm", ta_c},
                 {"magnitude_l1", ta_l1},
                 {"slope_cnorm", report.ta_slope_cnorm.slope},
                 {"stderr_cnorm", report.ta_slope_cnorm.stderr_},
                 {"slope_l1", report.ta_slope_l1.slope},
                 {"stderr_l1", report.ta_slope_l1.stderr_}};
  if (report.has_rr) {
    j["rr"] = Json{{"magnitude_cnorm", rr_c},
                   {"magnitude_l1", rr_l1},
                   {"slope_cnorm", report.rr_slope_cnorm.slope},
                   {"stderr_cnorm", report.rr_slope_cnorm.stderr_},
                   {"slope_l1", report.rr_slope_l1.slope},
                   {"stderr_l1", report.rr_slope_l1.stderr_}};
  }
  return j;
}

BiasReport run_bias_kind(const ExperimentConfig& cfg, const BuiltDynamic& dyn,
                         const RngStream& master, bool with_rr) {
  std::vector<BiasEntry> entries;
  for (size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
    const RngStream base = master.split(uint64_t(ai));
    std::optional<double> rr =
        with_rr ? std::optional<double>(cfg.beta) : std::nullopt;
    if (dyn.is_mdp) {
      entries.push_back(estimate_bias_q(
          *dyn.mdp, dyn.mode, dyn.reward, dyn.q_star, cfg.alphas[ai],
          cfg.replicas, cfg.steps, cfg.burn_in_fraction, base, rr, dyn.q0,
          cfg.threads));
    } else {
      entries.push_back(estimate_bias(*dyn.op, *dyn.noise, cfg.alphas[ai],
                                      cfg.replicas, cfg.steps,
                                      cfg.burn_in_fraction, base, rr,
                                      dyn.theta0, cfg.threads));
    }
  }
  const int dim = dyn.is_mdp ? dyn.mdp->n_sa() : dyn.op->dim();
  const Norm norm = dyn.is_mdp ? Norm::LInf : dyn.op->norm();
  return bias_report_from_entries(std::move(entries), dim, norm, with_rr);
}

std::vector<CouplingCurve> run_coupling_kind(const ExperimentConfig& cfg,
                                             const BuiltDynamic& dyn,
                                             const RngStream& master) {
  if (dyn.is_mdp) {
    throw UnsupportedError("coupling experiments need an operator dynamic");
  }
  const Operator& op = *dyn.op;
  if (cfg.coupling_mode != "shared" && !op.fixed_point()) {
    throw std::invalid_argument(
        "stepsize-ratio coupling needs an operator with a declared fixed point");
  }
  std::vector<CouplingCurve> curves(cfg.alphas.size());
  for (size_t ai = 0; ai < cfg.alphas.size(); ++ai) {
    const double alpha = cfg.alphas[ai];
    const RngStream base = master.split(uint64_t(ai));
    std::vector<std::vector<double>> per_replica(static_cast<size_t>(cfg.replicas));
    parallel_for(cfg.replicas, cfg.threads, [&](int64_t r) {
      RngStream rs = base.split(uint64_t(r));
      if (cfg.coupling_mode == "shared") {
        Vec a = cfg.theta0_a.empty() ? Vec(op.dim(), 1.0) : cfg.theta0_a;
        Vec b = cfg.theta0_b.empty() ? Vec(op.dim(), -1.0) : cfg.theta0_b;
        per_replica[size_t(r)] = coupled_shared_noise(
            a, b, alpha, cfg.steps, op, *dyn.noise, rs);
      } else {
        const Vec& star = *op.fixed_point();
        per_replica[size_t(r)] = coupled_stepsize_ratio(
            alpha, cfg.coupling_k, cfg.steps, op, *dyn.noise, rs, star);
      }
    });
    CouplingCurve curve;
    curve.alpha = alpha;
    curve.mean_sq_dist.assign(size_t(cfg.steps) + 1, 0.0);
    for (const auto& row : per_replica) {
      for (size_t t = 0; t < row.size(); ++t) curve.mean_sq_dist[t] += row[t];
    }
    for (double& v : curve.mean_sq_dist) v /= cfg.replicas;
    const int64_t k0 = int64_t(cfg.burn_in_fraction * double(cfg.steps));
    double tail = 0.0;
    for (int64_t t = k0; t <= cfg.steps; ++t) tail += curve.mean_sq_dist[size_t(t)];
    curve.long_run_mean = tail / double(cfg.steps - k0 + 1);
    curves[ai] = std::move(curve);
  }
  return curves;
}

std::string coupling_csv(const ExperimentConfig& cfg,
                         const BuiltDynamic& dyn,
                         const std::vector<CouplingCurve>& curves) {
  std::ostringstream os;
  if (cfg.coupling_mode == "shared") {
    // Theoretical envelope: initial * (1 - alpha (1 - sqrt(gamma)))^t.
    const double gamma = dyn.op->contraction_modulus();
    os << "alpha,step,mean_sq_dist,geo_bound\n";
    for (const auto& c : curves) {
      const double rate = 1.0 - c.alpha * (1.0 - std::sqrt(gamma));
      double bound = c.mean_sq_dist[0];
      for (size_t t = 0; t < c.mean_sq_dist.size(); ++t) {
        os << format_full(c.alpha) << ',' << t << ',' << format_full(c.mean_sq_dist[t])
           << ',' << format_full(bound) << '\n';
        bound *= rate;
      }
    }
  } else {
    os << "alpha,k,long_run_mean_sq_dist\n";
    for (const auto& c : curves) {
      os << format_full(c.alpha) << ',' << cfg.coupling_k << ','
         << format_full(c.long_run_mean) << '\n';
    }
  }
  return os.str();
}

std::vector<W2Point> run_w2_kind(const ExperimentConfig& cfg,
                                 const BuiltDynamic& dyn,
                                 const RngStream& master) {
  if (dyn.is_mdp) {
    throw UnsupportedError("w2-convergence needs an operator dynamic");
  }
  const Operator& op = *dyn.op;
  const double alpha = cfg.alphas.front();
  const int64_t stride = cfg.checkpoint_stride;
  const int64_t n_checkpoints = cfg.steps / stride + 1;
  const int R = cfg.replicas;
  const RngStream base = master.split(0);

  // One sample per replica at each checkpoint; the stationary reference is
  // the final iterate of an independent, much longer run.
  std::vector<Trajectory> main_runs(static_cast<size_t>(R));
  std::vector<Vec> ref(static_cast<size_t>(R));
  parallel_for(R, cfg.threads, [&](int64_t r) {
    RngStream rs = base.split(0).split(uint64_t(r));
    main_runs[size_t(r)] =
        run_chain(dyn.theta0, alpha, cfg.steps, op, *dyn.noise, rs, stride);
    RngStream ref_rs = base.split(1).split(uint64_t(r));
    Trajectory long_run =
        run_chain(dyn.theta0, alpha, cfg.steps * cfg.reference_factor, op,
                  *dyn.noise, ref_rs, cfg.steps * cfg.reference_factor);
    const auto last = long_run.at(long_run.n_recorded() - 1);
    ref[size_t(r)] = Vec(last.begin(), last.end());
  });

  std::vector<W2Point> points;
  const int d = op.dim();
  for (int64_t ci = 0; ci < n_checkpoints; ++ci) {
    std::vector<double> xs(size_t(R) * d), ys(size_t(R) * d);
    for (int r = 0; r < R; ++r) {
      const auto row = main_runs[size_t(r)].at(ci);
      for (int j = 0; j < d; ++j) xs[size_t(r) * d + j] = row[j];
      for (int j = 0; j < d; ++j) ys[size_t(r) * d + j] = ref[size_t(r)][j];
    }
    W2Point pt;
    pt.step = ci * stride;
    if (d == 1) {
      pt.w2 = empirical_w2_1d(xs, ys).value;
    } else {
      pt.w2 = empirical_w2_assignment(xs, ys, size_t(R), d, op.norm(),
                                      size_t(R))
                  .value;
    }
    points.push_back(pt);
  }
  return points;
}

std::string w2_csv(const std::vector<W2Point>& points) {
  std::ostringstream os;
  os << "step,w2\n";
  for (const auto& p : points) {
    os << p.step << ',' << format_full(p.w2) << '\n';
  }
  return os.str();
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = config;
  result.out_dir = config.out_dir;

  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);

  const RngStream master(config.seed);
  const BuiltDynamic dyn = build_dynamic(config, master);

  switch (config.kind) {
    case ExperimentKind::BiasSweep:
    case ExperimentKind::RrCompare:
    case ExperimentKind::QExperiment: {
      if (config.kind == ExperimentKind::QExperiment && !dyn.is_mdp) {
        throw ParseError("config: q-experiment needs an MDP dynamic");
      }
      const bool with_rr = config.kind != ExperimentKind::BiasSweep;
      result.bias = run_bias_kind(config, dyn, master, with_rr);
      write_file(dir, "bias.csv", bias_csv(*result.bias), result.files);
      write_file(dir, "slope.json", slope_json(*result.bias).dump(2) + "\n",
                 result.files);
      break;
    }
    case ExperimentKind::Coupling: {
      result.coupling = run_coupling_kind(config, dyn, master);
      write_file(dir, "coupling.csv", coupling_csv(config, dyn, result.coupling),
                 result.files);
      break;
    }
    case ExperimentKind::W2Convergence: {
      result.w2 = run_w2_kind(config, dyn, master);
      write_file(dir, "w2.csv", w2_csv(result.w2), result.files);
      break;
    }
  }
  if (dyn.is_mdp) {
    write_file(dir, "mdp.txt", mdp_to_string(*dyn.mdp), result.files);
  }

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  Json manifest;
  manifest["tool"] = "salab";
  manifest["version"] = "0.1.0";
  manifest["seed"] = config.seed;
  manifest["threads"] = config.threads;
  manifest["config"] = config.to_json();
  manifest["outputs"] = result.files;
  manifest["wall_time_ms"] = elapsed;
  write_file(dir, "manifest.json", manifest.dump(2) + "\n", result.files);
  return result;
}

std::string describe_mdp_text(const Mdp& mdp, double tie_tol) {
  const Vec q_star = solve_q_star(mdp, 1e-12);
  const ClassificationResult cls = classify(mdp, q_star, tie_tol);
  std::ostringstream os;
  os << "states: " << mdp.n_states << "  actions: " << mdp.n_actions
     << "  gamma: " << format_full(mdp.gamma)
     << "  reward_noise_std: " << format_full(mdp.reward_noise_std) << '\n';
  os << "q* (value iteration):\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    os << "  state " << s << ':';
    for (int a = 0; a < mdp.n_actions; ++a) {
      os << "  a" << a << " = " << format_full(q_star[size_t(mdp.sa_index(s, a))]);
    }
    os << '\n';
  }
  os << "classification (tie_tol = " << format_full(tie_tol) << "):\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    os << "  state " << s << ": A* = {";
    const auto& acts = cls.states.optimal_actions[s];
    for (size_t i = 0; i < acts.size(); ++i) {
      if (i) os << ", ";
      os << acts[i];
    }
    os << '}';
    if (cls.states.tied[s]) os << "  tied";
    if (cls.states.rooted[s]) os << "  rooted";
    os << '\n';
  }
  if (cls.type == MdpType::TypeA) {
    os << "type: TypeA (witness: state " << *cls.witness << ")\n";
  } else {
    os << "type: TypeB\n";
  }
  const Vec ones(mdp.n_sa(), 1.0);
  os << "gamma0 (D = I): " << format_full(gamma0(mdp, ones)) << '\n';
  os << "gamma0 (D = diag(kappa_b)): ";
  bool kappa_ok = true;
  for (double k : mdp.kappa_b) {
    if (!(k > 0.0)) kappa_ok = false;
  }
  if (kappa_ok) {
    os << format_full(gamma0(mdp, mdp.kappa_b)) << '\n';
  } else {
    os << "undefined (kappa_b has zero entries)\n";
  }
  return os.str();
}

}  // namespace salab
