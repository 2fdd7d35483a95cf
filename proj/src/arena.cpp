#include "miniaxie/arena.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "miniaxie/errors.hpp"
#include "miniaxie/latent_index.hpp"

namespace miniaxie {

RoundAction RandomPolicy::act(const GameState& view, SplitMix64& rng) const {
  std::vector<RoundAction> legal = enumerate_actions(view);
  return legal[rng.uniform_int(legal.size())];
}

RoundAction GreedyAttackPolicy::act(const GameState& view, SplitMix64&) const {
  std::vector<RoundAction> legal = enumerate_actions(view);
  std::size_t best = 0;
  int best_attack = total_effective_attack(view.team(0), legal[0]);
  for (std::size_t i = 1; i < legal.size(); ++i) {
    int attack = total_effective_attack(view.team(0), legal[i]);
    if (attack > best_attack) {  // ties keep the earlier (canonical) action
      best_attack = attack;
      best = i;
    }
  }
  return legal[best];
}

CheckpointPolicy::CheckpointPolicy(AgentCheckpoint ckpt) : ckpt_(std::move(ckpt)) {
  if (ckpt_.variant == AgentVariant::kLatentRetrieval && (!ckpt_.actor || !ckpt_.embedding))
    throw ConfigError("latent-retrieval checkpoint is missing actor or embedding");
}

std::string CheckpointPolicy::name() const { return variant_name(ckpt_.variant); }

RoundAction CheckpointPolicy::act(const GameState& view, SplitMix64&) const {
  std::vector<RoundAction> legal = enumerate_actions(view);
  StateFeatures s = featurize(view);
  if (ckpt_.variant == AgentVariant::kLatentRetrieval)
    return select(s, std::move(legal), *ckpt_.actor, *ckpt_.embedding, ckpt_.critic, ckpt_.k);
  return select_full_eval(s, legal, ckpt_.critic, critic_encoding(ckpt_.variant));
}

std::optional<std::uint64_t> CheckpointPolicy::required_env_digest() const {
  return ckpt_.env_digest;
}

std::unique_ptr<Policy> make_rule_policy(const std::string& name) {
  if (name == "random") return std::make_unique<RandomPolicy>();
  if (name == "greedy") return std::make_unique<GreedyAttackPolicy>();
  throw ConfigError("unknown rule policy '" + name + "' (expected random or greedy)");
}

namespace {

GameRecord play_game(const Policy& a, const Policy& b, const EnvConfig& env, int game_index,
                     std::uint64_t seed, bool keep_replay) {
  GameRecord record;
  record.game_index = game_index;
  record.seed = seed;
  GameState state = new_game(env, seed);
  SplitMix64 rng_a(mix_seed(seed, 2));  // streams 0/1 drive the in-game deals
  SplitMix64 rng_b(mix_seed(seed, 3));
  while (!state.terminal) {
    int round_index = state.round_index;
    RoundAction action_a = a.act(state, rng_a);
    RoundAction action_b = b.act(mirrored(state), rng_b);
    TwoPlayerStepResult next = step_two_player(state, action_a, action_b);
    ++record.rounds;
    if (keep_replay) {
      record.replay += replay_line(round_index, action_a, action_b, next.state,
                                   terminal_reward(next.state, env.discard_penalty));
      record.replay += '\n';
    }
    state = std::move(next.state);
  }
  record.result = state.result;
  record.discards_a = state.players[0].discard_count;
  record.discards_b = state.players[1].discard_count;
  return record;
}

}  // namespace

BattleResult battle(const Policy& a, const Policy& b, const EnvConfig& env, int n_games,
                    std::uint64_t base_seed, const BattleOptions& options) {
  if (n_games < 1) throw UsageError("battle: n_games must be >= 1");
  std::uint64_t digest = env_digest(env);
  for (const Policy* p : {&a, &b}) {
    if (auto required = p->required_env_digest(); required && *required != digest)
      throw ConfigError("policy '" + p->name() + "' was trained for a different env config");
  }

  BattleResult result;
  result.name_a = a.name();
  result.name_b = b.name();
  result.base_seed = base_seed;
  result.games = n_games;
  result.records.resize(static_cast<std::size_t>(n_games));

  auto run_range = [&](int begin, int end) {
    for (int i = begin; i < end; ++i)
      result.records[static_cast<std::size_t>(i)] =
          play_game(a, b, env, i, base_seed + static_cast<std::uint64_t>(i),
                    options.keep_replays);
  };
  int workers = std::clamp(options.workers, 1, n_games);
  if (workers == 1) {
    run_range(0, n_games);
  } else {
    std::vector<std::thread> pool;
    int per = (n_games + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      int begin = w * per;
      int end = std::min(n_games, begin + per);
      if (begin < end) pool.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : pool) t.join();
  }

  for (const GameRecord& record : result.records) {
    if (record.result > 0)
      ++result.wins;
    else if (record.result < 0)
      ++result.losses;
    else
      ++result.ties;
  }
  result.winrate = static_cast<double>(result.wins) / static_cast<double>(result.games);
  result.standard_error =
      std::sqrt(result.winrate * (1.0 - result.winrate) / static_cast<double>(result.games));
  return result;
}

BattleResult evaluate_vs_random(const Policy& agent, const EnvConfig& env, int n_games,
                                std::uint64_t base_seed, const BattleOptions& options) {
  RandomPolicy opponent;
  return battle(agent, opponent, env, n_games, base_seed, options);
}

int win_difference(const BattleResult& ours, const BattleResult& baseline) {
  if (ours.games != baseline.games)
    throw UsageError("win_difference: games counts differ");
  if (ours.base_seed != baseline.base_seed)
    throw UsageError("win_difference: battles used different seeds");
  if (ours.name_b != baseline.name_b)
    throw UsageError("win_difference: battles used different opponents");
  return ours.wins - baseline.wins;
}

std::string battle_report(const BattleResult& result) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%d,%d,%d,%d,%.17g,%.17g\n",
                result.name_a.c_str(), result.name_b.c_str(),
                static_cast<unsigned long long>(result.base_seed), result.games, result.wins,
                result.ties, result.losses, result.winrate, result.standard_error);
  return "agent_a,agent_b,base_seed,games,wins,ties,losses,winrate,standard_error\n" +
         std::string(buf);
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (true) {
    std::size_t end = line.find(sep, begin);
    out.push_back(line.substr(begin, end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return out;
}

}  // namespace

std::vector<CurvePoint> parse_metrics(const std::string& metrics_text, const std::string& tag) {
  std::istringstream in(metrics_text);
  std::string line;
  std::vector<CurvePoint> points;
  bool saw_header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != metrics_header())
        throw ParseError("metrics line 1: unexpected header '" + line + "'");
      saw_header = true;
      continue;
    }
    std::vector<std::string> fields = split(line, ',');
    if (fields.size() != 6)
      throw ParseError("metrics line " + std::to_string(line_no) + ": expected 6 fields");
    CurvePoint point;
    point.tag = tag;
    auto [sp, sec] = std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(),
                                     point.env_steps);
    if (sec != std::errc() || sp != fields[1].data() + fields[1].size())
      throw ParseError("metrics line " + std::to_string(line_no) + ": bad env_steps");
    try {
      std::size_t used = 0;
      point.mean_return = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      throw ParseError("metrics line " + std::to_string(line_no) + ": bad mean_return");
    }
    points.push_back(std::move(point));
  }
  return points;
}

std::string export_curves(std::vector<CurvePoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const CurvePoint& a, const CurvePoint& b) {
    return a.tag != b.tag ? a.tag < b.tag : a.env_steps < b.env_steps;
  });
  std::string out = "tag,env_steps,mean_return\n";
  char buf[128];
  for (const CurvePoint& p : points) {
    std::snprintf(buf, sizeof(buf), ",%lld,%.17g\n", p.env_steps, p.mean_return);
    out += p.tag;
    out += buf;
  }
  return out;
}

}  // namespace miniaxie
