#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "miniaxie/action_codec.hpp"
#include "miniaxie/env.hpp"
#include "miniaxie/nn.hpp"

namespace miniaxie {

inline constexpr int kDefaultLatentDim = 16;

using LatentAction = std::vector<double>;

struct TransitionRecord {
  StateFeatures s;
  FlatAction a;
  StateFeatures s_next;

  bool operator==(const TransitionRecord&) const = default;
};

struct TransitionDataset {
  std::vector<TransitionRecord> records;
  std::uint64_t seed = 0;
  std::uint64_t env_digest = 0;

  bool operator==(const TransitionDataset&) const = default;
};

// Full episodes of uniform-random legal play (opponent in its configured
// mode), recording (featurize(s), encode(a), featurize(s')) until exactly
// n_transitions records exist.
TransitionDataset collect_random_transitions(const EnvConfig& config,
                                             std::size_t n_transitions, std::uint64_t seed);

// Mean over the batch of the per-record mean squared error between
// m(s ++ f(a)) and s'.
double j1_loss(const Network& f, const Network& m, std::span<const TransitionRecord> batch);

struct J1Gradients {
  double loss = 0.0;
  std::vector<double> f_grad;
  std::vector<double> m_grad;
};

J1Gradients j1_gradients(const Network& f, const Network& m,
                         std::span<const TransitionRecord> batch);

struct PretrainOptions {
  int latent_dim = kDefaultLatentDim;
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::vector<int> f_hidden = {64};
  std::vector<int> m_hidden = {128};
};

struct LossRow {
  int epoch = 0;  // 0 is the pre-training evaluation
  double train = 0.0;
  double holdout = 0.0;
};

struct PretrainResult {
  Network f;
  Network m;
  std::vector<LossRow> history;  // epochs + 1 rows
};

// Stage-1 training: seeded 90/10 split, mini-batch adaptive-moment descent
// on both networks. Throws TrainingError on divergence.
PretrainResult pretrain(const TransitionDataset& dataset, const PretrainOptions& options,
                        std::uint64_t seed);

LatentAction embed(const Network& f, const FlatAction& a);

// Dataset file: versioned header (count, dims, seed, env digest) then packed
// 64-bit records.
void save_dataset(const TransitionDataset& dataset, const std::string& path);
TransitionDataset load_dataset(const std::string& path);
void export_dataset_text(const TransitionDataset& dataset, std::ostream& out);

struct EmbeddingCheckpoint {
  Network f;
  Network m;  // kept for diagnostics only; stage 2 uses f alone
  std::uint64_t env_digest = 0;
};

void save_embedding_checkpoint(const EmbeddingCheckpoint& ckpt, const std::string& path);
EmbeddingCheckpoint load_embedding_checkpoint(const std::string& path);

}  // namespace miniaxie
