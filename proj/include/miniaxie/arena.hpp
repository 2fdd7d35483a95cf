#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "miniaxie/agent.hpp"
#include "miniaxie/env.hpp"

namespace miniaxie {

// A deterministic decision rule. `view` always presents the acting player
// as side A; `rng` is that player's per-game decision stream.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual RoundAction act(const GameState& view, SplitMix64& rng) const = 0;
  // Games are refused when this is set and does not match the arena's env.
  virtual std::optional<std::uint64_t> required_env_digest() const { return std::nullopt; }
};

class RandomPolicy : public Policy {
 public:
  std::string name() const override { return "random"; }
  RoundAction act(const GameState& view, SplitMix64& rng) const override;
};

class GreedyAttackPolicy : public Policy {
 public:
  std::string name() const override { return "greedy"; }
  RoundAction act(const GameState& view, SplitMix64& rng) const override;
};

// Plays a trained checkpoint greedily (no exploration).
class CheckpointPolicy : public Policy {
 public:
  explicit CheckpointPolicy(AgentCheckpoint ckpt);
  std::string name() const override;
  RoundAction act(const GameState& view, SplitMix64& rng) const override;
  std::optional<std::uint64_t> required_env_digest() const override;
  const AgentCheckpoint& checkpoint() const { return ckpt_; }

 private:
  AgentCheckpoint ckpt_;
};

std::unique_ptr<Policy> make_rule_policy(const std::string& name);  // "random" | "greedy"

struct GameRecord {
  int game_index = 0;
  std::uint64_t seed = 0;
  int rounds = 0;
  int result = 0;  // -1/0/+1 for side A
  int discards_a = 0;
  int discards_b = 0;
  std::string replay;  // round-by-round JSON lines when requested

  bool operator==(const GameRecord&) const = default;
};

struct BattleResult {
  std::string name_a;
  std::string name_b;
  std::uint64_t base_seed = 0;
  int games = 0;
  int wins = 0;
  int ties = 0;
  int losses = 0;
  double winrate = 0.0;
  double standard_error = 0.0;  // sqrt(winrate*(1-winrate)/games)
  std::vector<GameRecord> records;
};

struct BattleOptions {
  bool keep_replays = false;
  int workers = 1;
};

// n_games seeded games (game i uses seed base_seed + i); records reduced in
// game-index order regardless of worker count.
BattleResult battle(const Policy& a, const Policy& b, const EnvConfig& env, int n_games,
                    std::uint64_t base_seed, const BattleOptions& options = {});

BattleResult evaluate_vs_random(const Policy& agent, const EnvConfig& env, int n_games,
                                std::uint64_t base_seed, const BattleOptions& options = {});

// wins_ours - wins_baseline; both results must come from the same opponent,
// games count and seeds.
int win_difference(const BattleResult& ours, const BattleResult& baseline);

// Single-row delimited summary with header.
std::string battle_report(const BattleResult& result);

struct CurvePoint {
  std::string tag;
  long long env_steps = 0;
  double mean_return = 0.0;

  bool operator==(const CurvePoint&) const = default;
};

// Parses a metrics stream (header + rows) into curve points labeled `tag`.
// Throws ParseError on malformed input.
std::vector<CurvePoint> parse_metrics(const std::string& metrics_text, const std::string& tag);

// Plottable table "tag,env_steps,mean_return", rows sorted by (tag, steps).
std::string export_curves(std::vector<CurvePoint> points);

}  // namespace miniaxie
