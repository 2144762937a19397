// salab command-line front end. Talks to the core exclusively through the
// C API in salab.h.

#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "salab.h"

namespace {

int report_failure(const char* action, salab_status status) {
  std::fprintf(stderr, "salab: %s failed: %s\n", action, salab_last_error());
  switch (status) {
    case SALAB_PARSE_ERROR:
    case SALAB_INVALID_ARGUMENT:
      return 2;
    case SALAB_DIVERGENCE:
      return 3;
    case SALAB_IO_ERROR:
      return 4;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"salab - constant-stepsize stochastic approximation lab"};
  app.require_subcommand(1);

  // run: execute a preset or a JSON config file.
  auto* run = app.add_subcommand("run", "run an experiment");
  std::string preset, config_path, out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;
  run->add_option("--preset", preset, "built-in preset name");
  run->add_option("--config", config_path,
                  "JSON config file (or a manifest.json to replay)");
  run->add_option_function<uint64_t>(
         "--seed", [&](uint64_t v) { seed = v; seed_set = true; },
         "master seed (default 0)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--threads", threads, "worker threads for replicas");

  auto* describe = app.add_subcommand("describe-mdp",
                                      "print q*, tied/rooted flags and the "
                                      "Type A/B classification of an MDP file");
  std::string mdp_path;
  describe->add_option("path", mdp_path, "MDP text file")->required();

  auto* make = app.add_subcommand("make-mdp", "sample a random MDP to a file");
  int n_states = 3, n_actions = 2;
  double gamma = 0.9, sigma_r = 0.5477225575051661;
  bool type_a = false;
  uint64_t mk_seed = 0;
  std::string mk_out;
  make->add_option("--states", n_states, "number of states");
  make->add_option("--actions", n_actions, "number of actions");
  make->add_option("--gamma", gamma, "discount factor");
  make->add_option("--sigma-r", sigma_r, "reward noise std");
  make->add_flag("--type-a", type_a,
                 "tie the first two actions of state 0 (Type A construction)");
  make->add_option("--seed", mk_seed, "seed for the draw");
  make->add_option("--out", mk_out, "output path")->required();

  auto* presets = app.add_subcommand("presets", "list built-in presets");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (preset.empty() == config_path.empty()) {
      std::fprintf(stderr, "salab: run needs exactly one of --preset/--config\n");
      return 2;
    }
    salab_status st;
    if (!preset.empty()) {
      st = salab_run_preset(preset.c_str(), seed,
                            out_dir.empty() ? nullptr : out_dir.c_str(),
                            threads);
    } else {
      st = salab_run_config_file(config_path.c_str(), seed_set ? 1 : 0, seed,
                                 out_dir.empty() ? nullptr : out_dir.c_str(),
                                 threads);
    }
    if (st != SALAB_OK) return report_failure("run", st);
    return 0;
  }

  if (describe->parsed()) {
    char* text = nullptr;
    const salab_status st = salab_describe_mdp(mdp_path.c_str(), &text);
    if (st != SALAB_OK) return report_failure("describe-mdp", st);
    std::fputs(text, stdout);
    salab_string_free(text);
    return 0;
  }

  if (make->parsed()) {
    salab_rng* rng = salab_rng_create(mk_seed);
    salab_mdp* mdp = nullptr;
    salab_status st =
        salab_mdp_random(rng, n_states, n_actions, gamma, sigma_r, &mdp);
    if (st == SALAB_OK && type_a) {
      salab_mdp* tied = nullptr;
      st = salab_mdp_make_type_a(mdp, &tied);
      if (st == SALAB_OK) {
        salab_mdp_destroy(mdp);
        mdp = tied;
      }
    }
    if (st == SALAB_OK) st = salab_mdp_save(mdp, mk_out.c_str());
    salab_mdp_destroy(mdp);
    salab_rng_destroy(rng);
    if (st != SALAB_OK) return report_failure("make-mdp", st);
    std::printf("wrote %s\n", mk_out.c_str());
    return 0;
  }

  if (presets->parsed()) {
    const int n = salab_preset_count();
    for (int i = 0; i < n; ++i) std::printf("%s\n", salab_preset_name(i));
    return 0;
  }
  return 0;
}
