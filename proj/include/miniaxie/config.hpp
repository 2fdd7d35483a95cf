#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "miniaxie/agent.hpp"
#include "miniaxie/embedding.hpp"
#include "miniaxie/env.hpp"

namespace miniaxie {

struct EmbeddingSettings {
  int latent_dim = kDefaultLatentDim;
  long long dataset_size = 50000;
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::vector<int> f_hidden = {64};
  std::vector<int> m_hidden = {128};
};

PretrainOptions pretrain_options(const EmbeddingSettings& settings);

struct ArenaSettings {
  std::string opponent = "random";  // random | greedy | checkpoint path
  int n_games = 1000;
  bool keep_replays = false;
};

// Everything a pipeline command needs. Defaults are always materialized; a
// config file only overrides what it mentions, and unknown keys are errors.
struct RunConfig {
  EnvConfig env;            // teams resolved from the files below
  std::string team_a_file;  // empty = built-in default team
  std::string team_b_file;
  EmbeddingSettings embedding;
  AgentConfig agent;
  long long total_steps = 200000;
  ArenaSettings arena;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int workers = 1;
};

// Strict JSON load: type errors and unknown keys throw ConfigError.
RunConfig load_run_config(const std::string& path);

// Canonical echo (sorted keys, defaults materialized); the digest input.
std::string run_config_text(const RunConfig& config);
std::uint64_t config_digest(const RunConfig& config);

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t value);

struct ArtifactRef {
  std::string name;
  std::string path;  // must exist; its bytes are digested into the manifest
};

// Reproducibility manifest: command, config echo, digests, format versions,
// artifact digests. Deliberately no timestamps.
void write_manifest(const std::string& path, const std::string& command,
                    const RunConfig& config, const std::vector<ArtifactRef>& artifacts);

}  // namespace miniaxie
