#include "miniaxie/env.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "miniaxie/action_codec.hpp"
#include "miniaxie/errors.hpp"

namespace miniaxie {

namespace {

using json = nlohmann::json;

std::uint64_t fnv1a(std::uint64_t hash, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001B3ull;
  }
  return hash;
}

std::uint64_t fnv1a_int(std::uint64_t hash, std::int64_t v) {
  return fnv1a(hash, &v, sizeof(v));
}

}  // namespace

void validate_team(const TeamSpec& team) {
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    const AxieSpec& axie = team.axies[a];
    if (axie.axie_index != a)
      throw ConfigError("axie at position " + std::to_string(a) +
                        " has axie_index " + std::to_string(axie.axie_index));
    if (axie.max_health <= 0)
      throw ConfigError("axie " + std::to_string(a) + " has non-positive max_health");
    if (axie.speed <= 0)
      throw ConfigError("axie " + std::to_string(a) + " has non-positive speed");
    for (int c = 0; c < kCardsPerAxie; ++c) {
      const CardSpec& card = axie.cards[c];
      int expected_id = a * kCardsPerAxie + c;
      if (card.card_id != expected_id)
        throw ConfigError("card at axie " + std::to_string(a) + " slot " +
                          std::to_string(c) + " has card_id " +
                          std::to_string(card.card_id) + ", expected " +
                          std::to_string(expected_id));
      if (card.cost < 0 || card.cost > 2)
        throw ConfigError("card " + std::to_string(card.card_id) + " cost out of range");
      if (card.attack < 0 || card.shield < 0)
        throw ConfigError("card " + std::to_string(card.card_id) + " has negative stats");
      if (card.attack + card.shield <= 0)
        throw ConfigError("card " + std::to_string(card.card_id) + " has no effect");
    }
  }
}

TeamSpec default_team() {
  auto make_axie = [](int index, int health, int speed,
                      std::array<std::array<int, 3>, 4> stats) {
    AxieSpec axie;
    axie.axie_index = index;
    axie.max_health = health;
    axie.speed = speed;
    for (int c = 0; c < kCardsPerAxie; ++c) {
      axie.cards[c] = CardSpec{index * kCardsPerAxie + c, stats[c][0], stats[c][1],
                               stats[c][2]};
    }
    return axie;
  };
  TeamSpec team;
  team.axies[0] = make_axie(0, 120, 5, {{{30, 0, 1}, {20, 10, 1}, {0, 25, 1}, {40, 0, 2}}});
  team.axies[1] = make_axie(1, 140, 3, {{{25, 5, 1}, {15, 15, 1}, {0, 30, 1}, {35, 0, 2}}});
  team.axies[2] = make_axie(2, 160, 1, {{{20, 10, 1}, {10, 20, 1}, {0, 35, 1}, {30, 10, 2}}});
  return team;
}

std::uint64_t env_digest(const EnvConfig& config) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const TeamSpec* team : {&config.team_a, &config.team_b}) {
    for (const AxieSpec& axie : team->axies) {
      h = fnv1a_int(h, axie.max_health);
      h = fnv1a_int(h, axie.speed);
      for (const CardSpec& card : axie.cards) {
        h = fnv1a_int(h, card.attack);
        h = fnv1a_int(h, card.shield);
        h = fnv1a_int(h, card.cost);
      }
    }
  }
  h = fnv1a_int(h, config.round_limit);
  h = fnv1a(h, &config.discard_penalty, sizeof(config.discard_penalty));
  h = fnv1a_int(h, static_cast<int>(config.opponent));
  return h;
}

int action_cost(const TeamSpec& team, const RoundAction& action) {
  int cost = 0;
  for (const auto& seq : action.sequences)
    for (int card_id : seq) cost += team.card(card_id).cost;
  return cost;
}

int total_effective_attack(const TeamSpec& team, const RoundAction& action) {
  int total = 0;
  for (const auto& seq : action.sequences)
    for (std::size_t pos = 0; pos < seq.size(); ++pos)
      total += effective_attack(team.card(seq[pos]).attack, static_cast<int>(pos));
  return total;
}

namespace {

void deal_cards(PlayerState& player, int n) {
  for (int i = 0; i < n && player.deck_cursor < kDeckSize; ++i) {
    int card = player.deck_order[player.deck_cursor++];
    --player.deck_counts[card];
    ++player.hand[card];
  }
}

// Discards uniformly random cards until the hand fits the cap.
void enforce_hand_cap(PlayerState& player) {
  int size = player.hand_size();
  while (size > kHandCap) {
    auto pick = static_cast<int>(player.rng.uniform_int(static_cast<std::uint64_t>(size)));
    for (int card = 0; card < kCardTypes; ++card) {
      pick -= player.hand[card];
      if (pick < 0) {
        --player.hand[card];
        ++player.used[card];
        ++player.discard_count;
        break;
      }
    }
    --size;
  }
}

}  // namespace

GameState new_game(const EnvConfig& config, std::uint64_t seed) {
  validate_team(config.team_a);
  validate_team(config.team_b);
  if (config.round_limit <= 0) throw ConfigError("round_limit must be positive");
  if (config.discard_penalty < 0) throw ConfigError("discard_penalty must be >= 0");

  GameState state;
  state.config = config;
  for (int side = 0; side < 2; ++side) {
    PlayerState& player = state.players[side];
    player.rng = SplitMix64(mix_seed(seed, static_cast<std::uint64_t>(side)));
    std::vector<std::int8_t> deck;
    deck.reserve(kDeckSize);
    for (int card = 0; card < kCardTypes; ++card)
      for (int copy = 0; copy < kCopiesPerCard; ++copy)
        deck.push_back(static_cast<std::int8_t>(card));
    shuffle(deck, player.rng);
    std::copy(deck.begin(), deck.end(), player.deck_order.begin());
    player.deck_counts.fill(kCopiesPerCard);
    player.energy = kInitialEnergy;
    deal_cards(player, kCardsDrawnPerRound);
    for (int a = 0; a < kAxiesPerTeam; ++a)
      state.axie_health[side * kAxiesPerTeam + a] = state.team(side).axies[a].max_health;
  }
  return state;
}

GameState new_game(const TeamSpec& team_a, const TeamSpec& team_b, std::uint64_t seed) {
  EnvConfig config;
  config.team_a = team_a;
  config.team_b = team_b;
  return new_game(config, seed);
}

std::string legality_violation(const GameState& state, int player,
                               const RoundAction& action) {
  const TeamSpec& team = state.team(player);
  const PlayerState& ps = state.players[player];
  std::array<int, kCardTypes> played{};
  int cost = 0;
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    const auto& seq = action.sequences[a];
    if (seq.size() > kMaxSequenceLen)
      return "sequence for axie " + std::to_string(a) + " has " +
             std::to_string(seq.size()) + " cards, limit is 4";
    if (!seq.empty() && !state.axie_alive(player * kAxiesPerTeam + a))
      return "axie " + std::to_string(a) + " is dead and cannot play cards";
    for (int card_id : seq) {
      if (card_id < 0 || card_id >= kCardTypes)
        return "card id " + std::to_string(card_id) + " out of range";
      if (card_id / kCardsPerAxie != a)
        return "card " + std::to_string(card_id) + " does not belong to axie " +
               std::to_string(a);
      ++played[card_id];
      if (played[card_id] > kCopiesPerCard)
        return "card " + std::to_string(card_id) + " played more than 2 times";
      if (played[card_id] > ps.hand[card_id])
        return "card " + std::to_string(card_id) + " not in hand (" +
               std::to_string(ps.hand[card_id]) + " held)";
      cost += team.card(card_id).cost;
    }
  }
  if (cost > ps.energy)
    return "total energy cost " + std::to_string(cost) + " exceeds energy " +
           std::to_string(ps.energy);
  return {};
}

bool is_legal(const GameState& state, int player, const RoundAction& action) {
  return legality_violation(state, player, action).empty();
}

namespace {

struct ActingCard {
  int side;
  int axie;  // index within team
  int pos;   // position within its sequence
  int card_id;
};

// Applies both actions to `state`: energy, card consumption, shields,
// speed-ordered combat, end-of-round bookkeeping, terminal detection.
void resolve_round(GameState& state, const RoundAction& action_a,
                   const RoundAction& action_b) {
  const std::array<const RoundAction*, 2> actions = {&action_a, &action_b};

  // Pay energy and move cards out of hands.
  for (int side = 0; side < 2; ++side) {
    PlayerState& player = state.players[side];
    player.energy -= action_cost(state.team(side), *actions[side]);
    for (const auto& seq : actions[side]->sequences) {
      for (int card_id : seq) {
        --player.hand[card_id];
        ++player.used[card_id];
      }
    }
  }

  // Phase 1: shields from every placed card, before anyone acts.
  for (int side = 0; side < 2; ++side) {
    for (int a = 0; a < kAxiesPerTeam; ++a) {
      for (int card_id : actions[side]->sequences[a])
        state.axie_shield[side * kAxiesPerTeam + a] +=
            state.team(side).card(card_id).shield;
    }
  }

  // Phase 2: all six axies act in descending speed order, ties broken by
  // side A first, then lower axie index.
  std::array<std::pair<int, int>, 2 * kAxiesPerTeam> order;  // (side, axie)
  int n = 0;
  for (int side = 0; side < 2; ++side)
    for (int a = 0; a < kAxiesPerTeam; ++a) order[n++] = {side, a};
  std::stable_sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
    int sx = state.team(x.first).axies[x.second].speed;
    int sy = state.team(y.first).axies[y.second].speed;
    if (sx != sy) return sx > sy;
    if (x.first != y.first) return x.first < y.first;
    return x.second < y.second;
  });

  for (const auto& [side, axie] : order) {
    int actor_index = side * kAxiesPerTeam + axie;
    const auto& seq = actions[side]->sequences[axie];
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      if (!state.axie_alive(actor_index)) break;  // dead axies skip their cards
      int attack = effective_attack(state.team(side).card(seq[pos]).attack,
                                    static_cast<int>(pos));
      if (attack <= 0) continue;
      int enemy_side = 1 - side;
      int target = -1;
      for (int t = 0; t < kAxiesPerTeam; ++t) {
        if (state.axie_alive(enemy_side * kAxiesPerTeam + t)) {
          target = enemy_side * kAxiesPerTeam + t;
          break;
        }
      }
      if (target < 0) continue;  // no living target left
      int absorbed = std::min(state.axie_shield[target], attack);
      state.axie_shield[target] -= absorbed;
      state.axie_health[target] = std::max(0, state.axie_health[target] - (attack - absorbed));
    }
  }

  state.round_index += 1;
  state.axie_shield.fill(0);  // shields expire with the round

  // At most one side can be wiped: damage only flows from living axies.
  if (state.side_wiped(1)) {
    state.terminal = true;
    state.result = 1;
    return;
  }
  if (state.side_wiped(0)) {
    state.terminal = true;
    state.result = -1;
    return;
  }

  // End of round: draws, hand cap, energy. Skipped when the game ended by a
  // wipe above; still runs on the transition into the round-limit tie.
  for (int side = 0; side < 2; ++side) {
    PlayerState& player = state.players[side];
    deal_cards(player, kCardsDrawnPerRound);
    enforce_hand_cap(player);
    player.energy = std::min(kEnergyCap, player.energy + kEnergyPerRound);
  }

  if (state.round_index >= state.config.round_limit) {
    state.terminal = true;
    state.result = 0;
  }
}

}  // namespace

double terminal_reward(const GameState& state_next, double c) {
  if (c < 0) throw UsageError("discard penalty c must be >= 0");
  if (!state_next.terminal) return 0.0;
  return static_cast<double>(state_next.result) -
         c * static_cast<double>(state_next.players[0].discard_count);
}

StepResult step(const GameState& state, const RoundAction& action) {
  if (state.terminal) throw UsageError("cannot step a terminal state");
  if (std::string why = legality_violation(state, 0, action); !why.empty())
    throw UsageError("illegal action: " + why);

  StepResult result;
  result.state = state;
  RoundAction opponent_action =
      rule_based_opponent(mirrored(result.state), result.state.players[1].rng);
  resolve_round(result.state, action, opponent_action);
  result.reward = terminal_reward(result.state, state.config.discard_penalty);
  result.done = result.state.terminal;
  return result;
}

TwoPlayerStepResult step_two_player(const GameState& state, const RoundAction& action_a,
                                    const RoundAction& action_b) {
  if (state.terminal) throw UsageError("cannot step a terminal state");
  if (std::string why = legality_violation(state, 0, action_a); !why.empty())
    throw UsageError("illegal action for side A: " + why);
  if (std::string why = legality_violation(state, 1, action_b); !why.empty())
    throw UsageError("illegal action for side B: " + why);

  TwoPlayerStepResult result;
  result.state = state;
  resolve_round(result.state, action_a, action_b);
  result.done = result.state.terminal;
  return result;
}

RoundAction rule_based_opponent(const GameState& state, SplitMix64& rng) {
  if (state.terminal) throw UsageError("opponent asked to act on a terminal state");
  std::vector<RoundAction> legal = enumerate_actions(state);
  if (state.config.opponent == OpponentMode::kGreedy) {
    int best = 0;
    int best_attack = -1;
    for (std::size_t i = 0; i < legal.size(); ++i) {
      int attack = total_effective_attack(state.team(0), legal[i]);
      if (attack > best_attack) {
        best_attack = attack;
        best = static_cast<int>(i);
      }
    }
    return legal[static_cast<std::size_t>(best)];
  }
  return legal[rng.uniform_int(legal.size())];
}

GameState mirrored(const GameState& state) {
  GameState result = state;
  std::swap(result.config.team_a, result.config.team_b);
  for (int i = 0; i < kAxiesPerTeam; ++i) {
    std::swap(result.axie_health[i], result.axie_health[i + kAxiesPerTeam]);
    std::swap(result.axie_shield[i], result.axie_shield[i + kAxiesPerTeam]);
  }
  std::swap(result.players[0], result.players[1]);
  result.result = -result.result;
  return result;
}

StateFeatures featurize(const GameState& state) {
  StateFeatures f{};
  int i = 0;
  for (int axie = 0; axie < 2 * kAxiesPerTeam; ++axie) {
    const AxieSpec& spec = state.team(axie / kAxiesPerTeam).axies[axie % kAxiesPerTeam];
    f[i++] = static_cast<double>(state.axie_health[axie]) / spec.max_health;
    // Stacked shields can exceed the nominal scale; clamp to keep [0, 1].
    f[i++] = std::min(1.0, static_cast<double>(state.axie_shield[axie]) / 50.0);
    f[i++] = state.axie_alive(axie) ? 1.0 : 0.0;
  }
  const PlayerState& self = state.players[0];
  for (int card = 0; card < kCardTypes; ++card)
    f[i++] = static_cast<double>(self.hand[card]) / kCopiesPerCard;
  for (int card = 0; card < kCardTypes; ++card)
    f[i++] = static_cast<double>(self.deck_counts[card]) / kCopiesPerCard;
  f[i++] = static_cast<double>(self.energy) / kEnergyCap;
  f[i++] = static_cast<double>(state.round_index) / state.config.round_limit;
  f[i++] = static_cast<double>(state.players[1].hand_size()) / kHandCap;
  f[i++] = std::min(1.0, static_cast<double>(self.discard_count) / 10.0);
  return f;
}

TeamSpec load_team_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open team file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("team file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("axies") || !doc["axies"].is_array())
    throw ConfigError("team file " + path + " must be an object with an \"axies\" array");
  const json& axies = doc["axies"];
  if (axies.size() != kAxiesPerTeam)
    throw ConfigError("team file " + path + " has " + std::to_string(axies.size()) +
                      " axies, expected 3");
  TeamSpec team;
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    const json& entry = axies[static_cast<std::size_t>(a)];
    for (const auto& [key, _] : entry.items()) {
      if (key != "max_health" && key != "speed" && key != "cards")
        throw ConfigError("team file " + path + ": unknown axie key \"" + key + "\"");
    }
    AxieSpec& axie = team.axies[a];
    axie.axie_index = a;
    axie.max_health = entry.at("max_health").get<int>();
    axie.speed = entry.at("speed").get<int>();
    const json& cards = entry.at("cards");
    if (!cards.is_array() || cards.size() != kCardsPerAxie)
      throw ConfigError("team file " + path + ": axie " + std::to_string(a) +
                        " must have exactly 4 cards");
    for (int c = 0; c < kCardsPerAxie; ++c) {
      const json& triple = cards[static_cast<std::size_t>(c)];
      if (!triple.is_array() || triple.size() != 3)
        throw ConfigError("team file " + path + ": card entries are [attack, shield, cost]");
      axie.cards[c] = CardSpec{a * kCardsPerAxie + c, triple[0].get<int>(),
                               triple[1].get<int>(), triple[2].get<int>()};
    }
  }
  validate_team(team);
  return team;
}

void save_team_file(const TeamSpec& team, const std::string& path) {
  json axies = json::array();
  for (const AxieSpec& axie : team.axies) {
    json cards = json::array();
    for (const CardSpec& card : axie.cards)
      cards.push_back({card.attack, card.shield, card.cost});
    axies.push_back({{"max_health", axie.max_health}, {"speed", axie.speed}, {"cards", cards}});
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write team file: " + path);
  out << json{{"axies", axies}}.dump(2) << "\n";
}

std::string replay_line(int round_index, const RoundAction& action_a,
                        const RoundAction& action_b, const GameState& post,
                        double reward) {
  auto seqs = [](const RoundAction& action) {
    json out = json::array();
    for (const auto& seq : action.sequences) out.push_back(seq);
    return out;
  };
  json line{{"round", round_index},
            {"action_a", seqs(action_a)},
            {"action_b", seqs(action_b)},
            {"health", post.axie_health},
            {"energy", {post.players[0].energy, post.players[1].energy}},
            {"reward", reward}};
  return line.dump();
}

}  // namespace miniaxie
