#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "miniaxie/cli.hpp"
#include "miniaxie/errors.hpp"

namespace {

using miniaxie::RunConfig;

struct CommonFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int workers = 0;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "JSON run configuration file");
    cmd.add_option("--seed", seed, "master seed (overrides the config file)")
        ->each([this](const std::string&) { seed_set = true; });
    cmd.add_option("--out", out_dir, "output directory (overrides the config file)");
    cmd.add_option("--workers", workers, "worker cap for parallel sections");
  }

  RunConfig resolve() const {
    RunConfig config;
    if (!config_path.empty()) config = miniaxie::load_run_config(config_path);
    if (seed_set) config.seed = seed;
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (workers > 0) config.workers = workers;
    return config;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MiniAxie: latent-action retrieval agents for a miniature card battler"};
  app.require_subcommand(1);

  CommonFlags common;

  CLI::App* collect = app.add_subcommand("collect", "record random-play transitions");
  common.attach(*collect);
  long long transitions = 0;
  collect->add_option("--transitions", transitions, "number of transitions to record");

  CLI::App* pretrain = app.add_subcommand("pretrain", "learn the action embedding (stage 1)");
  common.attach(*pretrain);
  std::string dataset_path;
  pretrain->add_option("--dataset", dataset_path, "transition dataset (default <out>/dataset.bin)");

  CLI::App* train = app.add_subcommand("train", "train an agent (stage 2)");
  common.attach(*train);
  std::string embedding_path;
  std::string variant;
  int k = 0;
  long long total_steps = -1;
  bool k_sweep = false;
  train->add_option("--embedding", embedding_path,
                    "embedding checkpoint (default <out>/embedding.ckpt for latent-retrieval)");
  train->add_option("--variant", variant,
                    "latent-retrieval | full-eval | full-eval-pooling");
  train->add_option("--k", k, "retrieval width");
  train->add_option("--total-steps", total_steps, "environment steps to train for");
  train->add_flag("--k-sweep", k_sweep, "ablation: train with k in {1, 8, 32, 128}");

  CLI::App* battle = app.add_subcommand("battle", "head-to-head evaluation");
  common.attach(*battle);
  std::string side_a = "random";
  std::string side_b = "random";
  int games = 0;
  bool replays = false;
  battle->add_option("--agent-a", side_a, "checkpoint path, random, or greedy");
  battle->add_option("--agent-b", side_b, "checkpoint path, random, or greedy");
  battle->add_option("--games", games, "games per battle");
  battle->add_flag("--replays", replays, "write round-by-round records");

  CLI::App* verify = app.add_subcommand("verify", "run the fast invariant suite");
  common.attach(*verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are usage errors
  }

  try {
    if (*collect) {
      RunConfig config = common.resolve();
      if (transitions > 0) config.embedding.dataset_size = transitions;
      auto outputs = miniaxie::cmd_collect(config);
      std::printf("wrote %s\n", outputs.dataset_path.c_str());
    } else if (*pretrain) {
      RunConfig config = common.resolve();
      std::string dataset = dataset_path.empty()
                                ? (std::string(config.out_dir) + "/dataset.bin")
                                : dataset_path;
      auto outputs = miniaxie::cmd_pretrain(config, dataset);
      std::printf("wrote %s\n", outputs.embedding_path.c_str());
    } else if (*train) {
      RunConfig config = common.resolve();
      if (!variant.empty()) config.agent.variant = miniaxie::variant_from_name(variant);
      if (k > 0) config.agent.k = k;
      if (total_steps >= 0) config.total_steps = total_steps;
      std::string embedding = embedding_path;
      if (embedding.empty() &&
          config.agent.variant == miniaxie::AgentVariant::kLatentRetrieval)
        embedding = std::string(config.out_dir) + "/embedding.ckpt";
      if (k_sweep) {
        for (const auto& outputs : miniaxie::cmd_train_k_sweep(config, embedding))
          std::printf("wrote %s\n", outputs.checkpoint_path.c_str());
      } else {
        auto outputs = miniaxie::cmd_train(config, embedding);
        std::printf("wrote %s\n", outputs.checkpoint_path.c_str());
      }
    } else if (*battle) {
      RunConfig config = common.resolve();
      if (games > 0) config.arena.n_games = games;
      if (replays) config.arena.keep_replays = true;
      auto outputs = miniaxie::cmd_battle(config, side_a, side_b);
      std::printf("%s", miniaxie::battle_report(outputs.result).c_str());
    } else if (*verify) {
      return miniaxie::cmd_verify(std::cout);
    }
  } catch (const miniaxie::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const miniaxie::UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const miniaxie::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const miniaxie::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
