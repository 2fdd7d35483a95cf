#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "miniaxie/rng.hpp"

namespace miniaxie {

inline constexpr int kAxiesPerTeam = 3;
inline constexpr int kCardsPerAxie = 4;
inline constexpr int kCardTypes = 12;       // kAxiesPerTeam * kCardsPerAxie
inline constexpr int kCopiesPerCard = 2;
inline constexpr int kDeckSize = 24;        // kCardTypes * kCopiesPerCard
inline constexpr int kMaxSequenceLen = 4;
inline constexpr int kHandCap = 9;
inline constexpr int kEnergyCap = 10;
inline constexpr int kInitialEnergy = 3;
inline constexpr int kEnergyPerRound = 2;
inline constexpr int kCardsDrawnPerRound = 3;
inline constexpr int kDefaultRoundLimit = 15;
inline constexpr int kStateFeatureDim = 46;

struct CardSpec {
  int card_id = 0;  // global index: axie_index * 4 + local index
  int attack = 0;
  int shield = 0;
  int cost = 0;  // in {0, 1, 2}

  bool operator==(const CardSpec&) const = default;
};

struct AxieSpec {
  int axie_index = 0;  // 0..2 within team
  int max_health = 1;
  int speed = 1;
  std::array<CardSpec, kCardsPerAxie> cards{};

  bool operator==(const AxieSpec&) const = default;
};

struct TeamSpec {
  std::array<AxieSpec, kAxiesPerTeam> axies{};

  const CardSpec& card(int card_id) const {
    return axies[card_id / kCardsPerAxie].cards[card_id % kCardsPerAxie];
  }

  bool operator==(const TeamSpec&) const = default;
};

// Throws ConfigError if the team violates any structural rule.
void validate_team(const TeamSpec& team);

// Fixed fixture team used whenever no team file is given.
TeamSpec default_team();

enum class OpponentMode { kUniform, kGreedy };

struct EnvConfig {
  TeamSpec team_a = default_team();
  TeamSpec team_b = default_team();
  int round_limit = kDefaultRoundLimit;
  double discard_penalty = 0.1;  // c in the terminal reward
  OpponentMode opponent = OpponentMode::kUniform;

  bool operator==(const EnvConfig&) const = default;
};

// Stable digest of everything that defines the game rules; stored in
// datasets and checkpoints so stale artifacts are rejected.
std::uint64_t env_digest(const EnvConfig& config);

// One ordered card sequence per friendly axie, each of length 0..4,
// holding global card ids.
struct RoundAction {
  std::array<std::vector<int>, kAxiesPerTeam> sequences;

  bool empty() const {
    return sequences[0].empty() && sequences[1].empty() && sequences[2].empty();
  }
  int total_cards() const {
    return static_cast<int>(sequences[0].size() + sequences[1].size() +
                            sequences[2].size());
  }
  bool operator==(const RoundAction&) const = default;
};

// Energy cost of an action under the given team's card costs.
int action_cost(const TeamSpec& team, const RoundAction& action);

// Total attack the action would deal including positional bonuses; used by
// the greedy opponent.
int total_effective_attack(const TeamSpec& team, const RoundAction& action);

// Attack value of a card at sequence position `pos` (0-based): +10% per
// position after the first, rounded down.
inline int effective_attack(int attack, int pos) { return attack * (10 + pos) / 10; }

struct PlayerState {
  std::array<int, kCardTypes> hand{};        // copies currently held
  std::array<int, kCardTypes> deck_counts{}; // copies still in the deck
  std::array<int, kCardTypes> used{};        // copies played or discarded
  std::array<std::int8_t, kDeckSize> deck_order{};
  int deck_cursor = 0;
  int energy = 0;
  int discard_count = 0;  // n_d
  SplitMix64 rng;         // own stream: deck shuffle, hand-cap discards

  int hand_size() const {
    int n = 0;
    for (int c : hand) n += c;
    return n;
  }

  bool operator==(const PlayerState&) const = default;
};

// Full observable situation of one match. A value type: copies are
// independent games. Axies 0-2 belong to side A, 3-5 to side B.
struct GameState {
  EnvConfig config;
  std::array<int, 2 * kAxiesPerTeam> axie_health{};
  std::array<int, 2 * kAxiesPerTeam> axie_shield{};
  std::array<PlayerState, 2> players;
  int round_index = 0;
  bool terminal = false;
  int result = 0;  // -1/0/+1 from side A's perspective; valid when terminal

  bool axie_alive(int global_index) const { return axie_health[global_index] > 0; }
  bool side_wiped(int side) const {
    for (int i = 0; i < kAxiesPerTeam; ++i)
      if (axie_health[side * kAxiesPerTeam + i] > 0) return false;
    return true;
  }
  const TeamSpec& team(int side) const { return side == 0 ? config.team_a : config.team_b; }

  bool operator==(const GameState&) const = default;
};

using StateFeatures = std::array<double, kStateFeatureDim>;

struct StepResult {
  GameState state;
  double reward = 0.0;
  bool done = false;
};

// Fresh game: energy 3 for both players, 3 cards dealt each from seeded
// per-player deck shuffles. Throws ConfigError on invalid teams.
GameState new_game(const EnvConfig& config, std::uint64_t seed);
GameState new_game(const TeamSpec& team_a, const TeamSpec& team_b, std::uint64_t seed);

// Empty string when the action is legal for `player` (0 = side A), otherwise
// a description of the violated rule.
std::string legality_violation(const GameState& state, int player, const RoundAction& action);
bool is_legal(const GameState& state, int player, const RoundAction& action);

// Side A plays `action`, side B plays the built-in rule-based opponent.
// Throws UsageError on illegal actions or terminal states.
StepResult step(const GameState& state, const RoundAction& action);

struct TwoPlayerStepResult {
  GameState state;
  bool done = false;
};

// Round resolution with both actions supplied externally (arena battles).
TwoPlayerStepResult step_two_player(const GameState& state, const RoundAction& action_a,
                                    const RoundAction& action_b);

// I - c*n_d on terminal states, 0 otherwise; I and n_d from side A's view.
double terminal_reward(const GameState& state_next, double c);

// Legal action for the acting side of `state` (the state must be presented
// from the opponent's own perspective; see mirrored()). Uniform over the
// legal set, or max-total-attack in greedy mode.
RoundAction rule_based_opponent(const GameState& state, SplitMix64& rng);

// Swaps the two sides so the former side B becomes the acting side A.
GameState mirrored(const GameState& state);

// 46-dim feature vector, every entry in [0, 1], acting player = side A.
StateFeatures featurize(const GameState& state);

// Team file: JSON object {"axies": [{"max_health", "speed", "cards":
// [[attack, shield, cost] x4]} x3]}.
TeamSpec load_team_file(const std::string& path);
void save_team_file(const TeamSpec& team, const std::string& path);

// One replay line per round: round index, both actions as card-id
// sequences, post-round health/energy, reward. JSON lines.
std::string replay_line(int round_index, const RoundAction& action_a,
                        const RoundAction& action_b, const GameState& post,
                        double reward);

}  // namespace miniaxie
