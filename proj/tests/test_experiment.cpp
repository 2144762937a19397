#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "salab/experiment.hpp"

using namespace salab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig small_rr_config(const std::string& out) {
  Json j;
  j["kind"] = "rr-compare";
  j["dynamic"] = Json{{"type", "operator"},
                      {"name", "scaled-abs"},
                      {"b", 0.0},
                      {"noise", Json{{"kind", "gaussian"}, {"sigma", 1.0}}},
                      {"theta0", {1.0}}};
  j["alphas"] = {0.1, 0.2, 0.4};
  j["steps"] = 4000;
  j["replicas"] = 8;
  j["burn_in_fraction"] = 0.5;
  j["beta"] = 0.5;
  j["seed"] = 3;
  j["out_dir"] = out;
  return parse_config(j);
}

}  // namespace

TEST_CASE("config parser diagnostics") {
  Json j;
  j["kind"] = "rr-compare";
  CHECK_THROWS_WITH_AS(parse_config(j), "config: missing field 'dynamic'",
                       ParseError);
  j["dynamic"] = Json{{"type", "operator"}};
  CHECK_THROWS_WITH_AS(parse_config(j), "config: missing field 'alphas'",
                       ParseError);
  j["alphas"] = {1.5};
  CHECK_THROWS_AS(parse_config(j), ParseError);
  j["alphas"] = {0.1};
  j["steps"] = 100;
  j["replicas"] = 0;
  CHECK_THROWS_AS(parse_config(j), ParseError);
  Json bad;
  bad["kind"] = "no-such-kind";
  CHECK_THROWS_AS(parse_config(bad), ParseError);
}

TEST_CASE("presets parse and are listed") {
  for (const auto& name : preset_names()) {
    const ExperimentConfig cfg = preset_config(name);
    CHECK(!cfg.alphas.empty());
  }
  CHECK_THROWS_AS(preset_config("nope"), ParseError);
}

TEST_CASE("rr-compare experiment emits schema-stable artifacts") {
  const fs::path dir = fresh_dir("salab_exp_rr");
  ExperimentConfig cfg = small_rr_config(dir.string());
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.bias.has_value());
  CHECK(res.bias->entries.size() == 3);

  const std::string bias = slurp(dir / "bias.csv");
  CHECK(bias.rfind("alpha,estimator,component,bias,stderr\n", 0) == 0);
  CHECK(bias.find(",TA,") != std::string::npos);
  CHECK(bias.find(",RR,") != std::string::npos);

  const Json slope = Json::parse(slurp(dir / "slope.json"));
  CHECK(slope.contains("ta"));
  CHECK(slope.contains("rr"));
  CHECK(slope["norm"] == "l2");

  const Json manifest = Json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["config"]["kind"] == "rr-compare");
  fs::remove_all(dir);
}

TEST_CASE("bias-sweep emits TA-only artifacts") {
  const fs::path dir = fresh_dir("salab_exp_ta");
  ExperimentConfig cfg = small_rr_config(dir.string());
  Json j = cfg.to_json();
  j["kind"] = "bias-sweep";
  cfg = parse_config(j);
  cfg.out_dir = dir.string();
  run_experiment(cfg);
  const std::string bias = slurp(dir / "bias.csv");
  CHECK(bias.find(",TA,") != std::string::npos);
  CHECK(bias.find(",RR,") == std::string::npos);
  const Json slope = Json::parse(slurp(dir / "slope.json"));
  CHECK(slope.contains("ta"));
  CHECK(!slope.contains("rr"));
  fs::remove_all(dir);
}

TEST_CASE("rerun with the same seed is byte-identical across thread counts") {
  const fs::path d1 = fresh_dir("salab_exp_det1");
  const fs::path d2 = fresh_dir("salab_exp_det2");
  ExperimentConfig c1 = small_rr_config(d1.string());
  c1.threads = 1;
  ExperimentConfig c2 = small_rr_config(d2.string());
  c2.threads = 8;
  run_experiment(c1);
  run_experiment(c2);
  CHECK(slurp(d1 / "bias.csv") == slurp(d2 / "bias.csv"));
  CHECK(slurp(d1 / "slope.json") == slurp(d2 / "slope.json"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("manifest replays to identical data files") {
  const fs::path d1 = fresh_dir("salab_exp_replay1");
  const fs::path d2 = fresh_dir("salab_exp_replay2");
  run_experiment(small_rr_config(d1.string()));
  ExperimentConfig replay = load_config_file((d1 / "manifest.json").string());
  replay.out_dir = d2.string();
  run_experiment(replay);
  CHECK(slurp(d1 / "bias.csv") == slurp(d2 / "bias.csv"));
  CHECK(slurp(d1 / "slope.json") == slurp(d2 / "slope.json"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("q-experiment writes the realized MDP next to its data") {
  const fs::path dir = fresh_dir("salab_exp_q");
  Json j;
  j["kind"] = "q-experiment";
  j["dynamic"] =
      Json{{"type", "mdp"},
           {"mdp", Json{{"random", Json{{"states", 3},
                                        {"actions", 2},
                                        {"gamma", 0.9},
                                        {"reward_noise_std",
                                         0.5477225575051661}}}}},
           {"type_a", true},
           {"mode", "synchronous"},
           {"reward_dist", "gaussian"},
           {"q0", 1.0}};
  j["alphas"] = {0.08, 0.16, 0.32};
  j["steps"] = 2000;
  j["replicas"] = 6;
  j["seed"] = 0;
  j["out_dir"] = dir.string();
  const ExperimentResult res = run_experiment(parse_config(j));
  REQUIRE(res.bias.has_value());
  const Mdp m = load_mdp((dir / "mdp.txt").string());
  const auto cls = classify(m, solve_q_star(m, 1e-12), 1e-9);
  CHECK(cls.type == MdpType::TypeA);
  const Json slope = Json::parse(slurp(dir / "slope.json"));
  CHECK(slope["norm"] == "linf");
  fs::remove_all(dir);
}

TEST_CASE("coupling experiment, both flavors") {
  SUBCASE("shared noise curve with its geometric envelope") {
    const fs::path dir = fresh_dir("salab_exp_cshared");
    Json j;
    j["kind"] = "coupling";
    j["dynamic"] = Json{{"type", "operator"},
                        {"name", "scaled-abs"},
                        {"b", 0.0},
                        {"noise", Json{{"kind", "gaussian"}, {"sigma", 1.0}}},
                        {"theta0", {0.0}}};
    j["alphas"] = {0.1};
    j["steps"] = 120;
    j["replicas"] = 50;
    j["coupling"] =
        Json{{"mode", "shared"}, {"theta0_a", {1.0}}, {"theta0_b", {-1.0}}};
    j["out_dir"] = dir.string();
    const ExperimentResult res = run_experiment(parse_config(j));
    REQUIRE(res.coupling.size() == 1);
    CHECK(res.coupling[0].mean_sq_dist[0] == doctest::Approx(4.0));
    const std::string csv = slurp(dir / "coupling.csv");
    CHECK(csv.rfind("alpha,step,mean_sq_dist,geo_bound\n", 0) == 0);
    fs::remove_all(dir);
  }
  SUBCASE("stepsize-ratio long-run summary per alpha") {
    const fs::path dir = fresh_dir("salab_exp_cratio");
    Json j;
    j["kind"] = "coupling";
    j["dynamic"] = Json{{"type", "operator"},
                        {"name", "scaled-abs"},
                        {"b", 0.0},
                        {"noise", Json{{"kind", "gaussian"}, {"sigma", 1.0}}},
                        {"theta0", {0.0}}};
    j["alphas"] = {0.2, 0.1};
    j["steps"] = 300;
    j["replicas"] = 30;
    j["coupling"] = Json{{"mode", "stepsize-ratio"}, {"k", 2}};
    j["out_dir"] = dir.string();
    const ExperimentResult res = run_experiment(parse_config(j));
    REQUIRE(res.coupling.size() == 2);
    CHECK(res.coupling[0].long_run_mean > 0.0);
    const std::string csv = slurp(dir / "coupling.csv");
    CHECK(csv.rfind("alpha,k,long_run_mean_sq_dist\n", 0) == 0);
    fs::remove_all(dir);
  }
}

TEST_CASE("w2-convergence decays toward the stationary sample") {
  const fs::path dir = fresh_dir("salab_exp_w2");
  Json j;
  j["kind"] = "w2-convergence";
  j["dynamic"] = Json{{"type", "operator"},
                      {"name", "scaled-abs"},
                      {"b", 0.0},
                      {"noise", Json{{"kind", "gaussian"}, {"sigma", 1.0}}},
                      {"theta0", {2.0}}};
  j["alphas"] = {0.1};
  j["steps"] = 400;
  j["replicas"] = 200;
  j["w2"] = Json{{"checkpoint_stride", 40}, {"reference_factor", 6}};
  j["out_dir"] = dir.string();
  const ExperimentResult res = run_experiment(parse_config(j));
  REQUIRE(res.w2.size() == 11);
  CHECK(res.w2.front().w2 > 4.0 * res.w2.back().w2);
  const std::string csv = slurp(dir / "w2.csv");
  CHECK(csv.rfind("step,w2\n", 0) == 0);
  fs::remove_all(dir);
}

TEST_CASE("describe text names the type and witness") {
  RngStream s(0);
  const Mdp base = random_mdp(s, 3, 2, 0.9, 0.1);
  const std::string type_b = describe_mdp_text(base);
  CHECK(type_b.find("type: TypeB") != std::string::npos);
  const std::string type_a = describe_mdp_text(make_type_a(base));
  CHECK(type_a.find("type: TypeA (witness: state 0)") != std::string::npos);
  CHECK(type_a.find("gamma0 (D = I): 0.9") != std::string::npos);
}
