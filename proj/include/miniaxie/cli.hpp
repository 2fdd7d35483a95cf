#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "miniaxie/arena.hpp"
#include "miniaxie/config.hpp"

namespace miniaxie {

// Pipeline commands. Each resolves paths under config.out_dir, writes its
// artifacts plus a reproducibility manifest, and returns what it wrote.

struct CollectOutputs {
  std::string dataset_path;
  std::string manifest_path;
};
CollectOutputs cmd_collect(const RunConfig& config);

struct PretrainOutputs {
  std::string embedding_path;
  std::string loss_path;  // epoch,train_j1,holdout_j1
  std::string manifest_path;
};
PretrainOutputs cmd_pretrain(const RunConfig& config, const std::string& dataset_path);

struct TrainOutputs {
  std::string tag;  // variant plus k for the latent method
  std::string checkpoint_path;
  std::string metrics_path;
  std::string manifest_path;
  std::vector<std::string> periodic_checkpoints;
};
// embedding_path may be empty for the baseline variants.
TrainOutputs cmd_train(const RunConfig& config, const std::string& embedding_path);

// The k ablation: reruns training with k in {1, 8, 32, 128}.
std::vector<TrainOutputs> cmd_train_k_sweep(const RunConfig& config,
                                            const std::string& embedding_path);

struct BattleOutputs {
  std::string report_path;
  std::string records_path;  // empty unless replays were kept
  std::string manifest_path;
  BattleResult result;
};
// Each side is "random", "greedy", or an agent checkpoint path.
BattleOutputs cmd_battle(const RunConfig& config, const std::string& side_a,
                         const std::string& side_b);

// Returns the process exit code (0 pass, 1 fail).
int cmd_verify(std::ostream& out);

}  // namespace miniaxie
