#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "miniaxie/action_codec.hpp"
#include "miniaxie/env.hpp"
#include "miniaxie/latent_index.hpp"
#include "miniaxie/nn.hpp"

namespace miniaxie {

// latent-retrieval is the embed/retrieve/argmax method; the other two are
// the full-evaluation baselines (count-only encoding, optionally pooled).
enum class AgentVariant : std::uint8_t {
  kLatentRetrieval = 0,
  kFullEval = 1,
  kFullEvalPooling = 2,
};

std::string variant_name(AgentVariant variant);
AgentVariant variant_from_name(const std::string& name);  // ConfigError on unknown

// What the critic sees as its action input.
enum class CriticEncoding : std::uint8_t {
  kMatrix = 0,         // 72-dim 6x12 flattening
  kDouzero = 1,        // 24-dim count rows
  kDouzeroPooled = 2,  // 12-dim max-pooled count rows
};

CriticEncoding critic_encoding(AgentVariant variant);
int critic_action_dim(CriticEncoding encoding);

// Fixed-window 1D max pooling (window 2, stride 2 halves 24 -> 12).
std::vector<double> max_pool_1d(std::span<const double> x, int window, int stride);

// The variant's critic action input derived from the full 72-dim encoding
// (whose first 24 entries are exactly the count rows).
std::vector<double> critic_action_input(CriticEncoding encoding, const FlatAction& executed);

struct AgentConfig {
  AgentVariant variant = AgentVariant::kLatentRetrieval;
  int k = 32;
  double c = 0.1;       // discard penalty used during training
  double sigma = 0.1;   // stddev of Gaussian noise on the raw action
  double epsilon = 0.1; // probability of a uniform-random legal action
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_size = 256;
  int episodes_per_iteration = 64;
  int update_passes = 1;     // sweeps over each iteration's steps
  int checkpoint_every = 10; // iterations between checkpoint callbacks
  std::vector<int> actor_hidden = {128, 128};
  std::vector<int> critic_hidden = {128, 128};
};

void validate(const AgentConfig& config);  // throws ConfigError

struct StepRecord {
  StateFeatures s;
  FlatAction executed{};  // encoding of the action actually played
  FlatAction raw{};       // raw actor output used (the executed encoding on uniform draws)
  double reward = 0.0;
  bool done = false;
};

struct EpisodeBuffer {
  std::vector<StepRecord> steps;
  double episode_return = 0.0;  // G, the undiscounted reward sum
};

// Actor output for a state; explicitly allowed to violate every action-
// matrix invariant ("raw" action).
FlatAction raw_action(const Network& actor, const StateFeatures& s);

// Critic argmax over the k candidates nearest raw_latent; returns the index
// into the candidate set. Q ties break toward the smaller canonical index.
std::size_t select_among(const StateFeatures& s, const CandidateSet& set,
                         std::span<const double> raw_latent, const Network& critic, int k);

// The full decision rule: raw action, embed, retrieve top-k, critic argmax.
RoundAction select(const StateFeatures& s, std::vector<RoundAction> legal, const Network& actor,
                   const Network& f, const Network& critic, int k);

struct ExploreResult {
  RoundAction action;
  FlatAction raw{};  // what goes into the episode buffer as the raw action
};

// epsilon-uniform over legal actions, otherwise select() with Gaussian noise
// (stddev sigma) added to the raw action before retrieval.
ExploreResult explore_action(const StateFeatures& s, std::vector<RoundAction> legal,
                             const Network& actor, const Network& f, const Network& critic,
                             const AgentConfig& config, SplitMix64& rng);

// Monte-Carlo targets: every step's target is the episode return (gamma=1).
// Throws UsageError unless the buffer ends with a done step.
std::vector<double> mc_returns(const EpisodeBuffer& episode);

struct CriticExample {
  StateFeatures s;
  std::vector<double> a;  // variant-encoded action input
  double target = 0.0;
};

// One adaptive-moment step on the mean squared error between critic(s ++ a)
// and the targets; returns the pre-step loss.
double critic_update(Network& critic, AdamState& opt, std::span<const CriticExample> batch);

// Critic as a black box: value plus gradient with respect to the action
// input. Lets tests drive the actor step with analytic critics.
struct ActionValueFn {
  std::function<double(std::span<const double> s, std::span<const double> a)> value;
  std::function<std::vector<double>(std::span<const double> s, std::span<const double> a)> grad;
};

// Deterministic-policy-gradient step: ascend mean_s q(s, u(s)) through the
// critic's action-input gradient at the raw action; the critic is not
// touched. Returns the pre-step objective (mean Q at the raw actions).
double actor_update(Network& actor, AdamState& opt, const ActionValueFn& critic,
                    std::span<const StateFeatures> states);
double actor_update(Network& actor, AdamState& opt, const Network& critic,
                    std::span<const StateFeatures> states);

// Critic argmax over every legal action under the variant's encoding.
// Throws EnumerationOverflowError when |legal| exceeds the cap.
RoundAction select_full_eval(const StateFeatures& s, std::span<const RoundAction> legal,
                             const Network& critic, CriticEncoding encoding,
                             std::size_t cap = kDefaultEnumerationCap);

struct IterationMetrics {
  int iteration = 0;
  long long env_steps = 0;  // cumulative
  double mean_return = 0.0;
  double critic_loss = 0.0;
  double mean_q = 0.0;
  long long wall_clock_ms = 0;  // cumulative; excluded from reproducibility checks
};

struct TrainResult {
  Network critic;
  std::optional<Network> actor;      // latent-retrieval only
  std::vector<IterationMetrics> metrics;
  long long env_steps = 0;
};

struct TrainHooks {
  std::function<void(const IterationMetrics&)> on_metrics;
  // iteration 0 fires before any update (the initial checkpoint).
  std::function<void(int iteration, const Network& critic, const Network* actor)> on_checkpoint;
};

// Stage-2 loop: collect episodes with exploration, Monte-Carlo targets,
// shuffled critic batches, then actor batches (latent variant). `embedding`
// is the frozen stage-1 network; required iff variant is latent-retrieval.
TrainResult train(const EnvConfig& env_config, const AgentConfig& config, long long total_steps,
                  const Network* embedding, std::uint64_t seed, const TrainHooks& hooks = {});

struct AgentCheckpoint {
  AgentVariant variant = AgentVariant::kLatentRetrieval;
  int k = 32;
  std::uint64_t env_digest = 0;
  std::uint64_t config_digest = 0;
  Network critic;
  std::optional<Network> actor;
  std::optional<Network> embedding;
};

void save_agent_checkpoint(const AgentCheckpoint& ckpt, const std::string& path);
AgentCheckpoint load_agent_checkpoint(const std::string& path);

std::string metrics_header();
std::string metrics_row(const IterationMetrics& m);

}  // namespace miniaxie
