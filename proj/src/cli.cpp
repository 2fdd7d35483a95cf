#include "miniaxie/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "miniaxie/embedding.hpp"
#include "miniaxie/errors.hpp"
#include "miniaxie/verify.hpp"

#include "blob_io.hpp"

namespace miniaxie {

namespace {

std::string out_path(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.out_dir);
  return (std::filesystem::path(config.out_dir) / name).string();
}

}  // namespace

CollectOutputs cmd_collect(const RunConfig& config) {
  if (config.embedding.dataset_size < 1) throw ConfigError("embedding.dataset_size must be >= 1");
  TransitionDataset dataset = collect_random_transitions(
      config.env, static_cast<std::size_t>(config.embedding.dataset_size), config.seed);
  CollectOutputs outputs{out_path(config, "dataset.bin"), out_path(config, "manifest_collect.json")};
  save_dataset(dataset, outputs.dataset_path);
  write_manifest(outputs.manifest_path, "collect", config,
                 {{"dataset", outputs.dataset_path}});
  return outputs;
}

PretrainOutputs cmd_pretrain(const RunConfig& config, const std::string& dataset_path) {
  TransitionDataset dataset = load_dataset(dataset_path);
  if (dataset.env_digest != env_digest(config.env))
    throw ConfigError(dataset_path + " was collected under a different env config");

  PretrainResult result = pretrain(dataset, pretrain_options(config.embedding), config.seed);

  PretrainOutputs outputs{out_path(config, "embedding.ckpt"),
                          out_path(config, "pretrain_loss.csv"),
                          out_path(config, "manifest_pretrain.json")};
  save_embedding_checkpoint({result.f, result.m, dataset.env_digest}, outputs.embedding_path);

  std::string loss_csv = "epoch,train_j1,holdout_j1\n";
  char buf[128];
  for (const LossRow& row : result.history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g\n", row.epoch, row.train, row.holdout);
    loss_csv += buf;
  }
  detail::write_file(outputs.loss_path, loss_csv);
  write_manifest(outputs.manifest_path, "pretrain", config,
                 {{"embedding", outputs.embedding_path}, {"loss_history", outputs.loss_path}});
  return outputs;
}

namespace {

std::string train_tag(const RunConfig& config) {
  std::string tag = variant_name(config.agent.variant);
  if (config.agent.variant == AgentVariant::kLatentRetrieval)
    tag += "_k" + std::to_string(config.agent.k);
  return tag;
}

}  // namespace

TrainOutputs cmd_train(const RunConfig& config, const std::string& embedding_path) {
  const bool latent = config.agent.variant == AgentVariant::kLatentRetrieval;
  std::optional<EmbeddingCheckpoint> embedding;
  if (latent) {
    if (embedding_path.empty())
      throw ConfigError("the latent-retrieval variant needs --embedding (run pretrain first)");
    embedding = load_embedding_checkpoint(embedding_path);
    if (embedding->env_digest != env_digest(config.env))
      throw ConfigError(embedding_path + " was pretrained under a different env config");
  }

  TrainOutputs outputs;
  outputs.tag = train_tag(config);
  outputs.checkpoint_path = out_path(config, "agent_" + outputs.tag + ".ckpt");
  outputs.metrics_path = out_path(config, "metrics_" + outputs.tag + ".csv");
  outputs.manifest_path = out_path(config, "manifest_train_" + outputs.tag + ".json");

  std::string metrics_csv = metrics_header() + "\n";
  std::uint64_t cfg_digest = config_digest(config);
  auto bundle = [&](const Network& critic, const Network* actor) {
    return AgentCheckpoint{config.agent.variant,
                           config.agent.k,
                           env_digest(config.env),
                           cfg_digest,
                           critic,
                           actor ? std::optional<Network>(*actor) : std::nullopt,
                           embedding ? std::optional<Network>(embedding->f) : std::nullopt};
  };

  TrainHooks hooks;
  hooks.on_metrics = [&](const IterationMetrics& m) { metrics_csv += metrics_row(m) + "\n"; };
  hooks.on_checkpoint = [&](int iteration, const Network& critic, const Network* actor) {
    char name[128];
    std::snprintf(name, sizeof(name), "ckpt_%s_iter%06d.ckpt", outputs.tag.c_str(), iteration);
    std::string path = out_path(config, name);
    save_agent_checkpoint(bundle(critic, actor), path);
    outputs.periodic_checkpoints.push_back(std::move(path));
  };

  TrainResult result = train(config.env, config.agent, config.total_steps,
                             embedding ? &embedding->f : nullptr, config.seed, hooks);

  save_agent_checkpoint(bundle(result.critic, result.actor ? &*result.actor : nullptr),
                        outputs.checkpoint_path);
  detail::write_file(outputs.metrics_path, metrics_csv);

  std::vector<ArtifactRef> artifacts{{"checkpoint", outputs.checkpoint_path},
                                     {"metrics", outputs.metrics_path}};
  for (std::size_t i = 0; i < outputs.periodic_checkpoints.size(); ++i)
    artifacts.push_back({"periodic_" + std::to_string(i), outputs.periodic_checkpoints[i]});
  write_manifest(outputs.manifest_path, "train", config, artifacts);
  return outputs;
}

std::vector<TrainOutputs> cmd_train_k_sweep(const RunConfig& config,
                                            const std::string& embedding_path) {
  std::vector<TrainOutputs> all;
  for (int k : {1, 8, 32, 128}) {
    RunConfig swept = config;
    swept.agent.k = k;
    all.push_back(cmd_train(swept, embedding_path));
  }
  return all;
}

namespace {

std::unique_ptr<Policy> resolve_policy(const std::string& side) {
  if (side == "random" || side == "greedy") return make_rule_policy(side);
  return std::make_unique<CheckpointPolicy>(load_agent_checkpoint(side));
}

}  // namespace

BattleOutputs cmd_battle(const RunConfig& config, const std::string& side_a,
                         const std::string& side_b) {
  std::unique_ptr<Policy> a = resolve_policy(side_a);
  std::unique_ptr<Policy> b = resolve_policy(side_b);
  BattleOptions options{config.arena.keep_replays, config.workers};
  BattleOutputs outputs;
  outputs.result = battle(*a, *b, config.env, config.arena.n_games, config.seed, options);
  outputs.report_path = out_path(config, "battle_report.csv");
  outputs.manifest_path = out_path(config, "manifest_battle.json");
  detail::write_file(outputs.report_path, battle_report(outputs.result));

  std::vector<ArtifactRef> artifacts{{"report", outputs.report_path}};
  if (config.arena.keep_replays) {
    outputs.records_path = out_path(config, "battle_records.jsonl");
    std::string records;
    char buf[160];
    for (const GameRecord& record : outputs.result.records) {
      std::snprintf(buf, sizeof(buf),
                    "{\"game\": %d, \"seed\": %llu, \"rounds\": %d, \"result\": %d, "
                    "\"discards_a\": %d, \"discards_b\": %d}\n",
                    record.game_index, static_cast<unsigned long long>(record.seed),
                    record.rounds, record.result, record.discards_a, record.discards_b);
      records += buf;
      records += record.replay;  // round-by-round lines, same schema as replay logs
    }
    detail::write_file(outputs.records_path, records);
    artifacts.push_back({"records", outputs.records_path});
  }
  write_manifest(outputs.manifest_path, "battle", config, artifacts);
  return outputs;
}

int cmd_verify(std::ostream& out) { return run_verification(out) ? 0 : 1; }

}  // namespace miniaxie
