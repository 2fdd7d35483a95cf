#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "miniaxie/arena.hpp"
#include "miniaxie/errors.hpp"
#include "test_util.hpp"

using namespace miniaxie;

namespace {

AgentCheckpoint tiny_full_eval_checkpoint(std::uint64_t env_dig, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Network critic = Network::glorot({kStateFeatureDim + kDouzeroDim, 8, 1},
                                   {Activation::kTanh, Activation::kIdentity}, rng);
  return {AgentVariant::kFullEval, 1, env_dig, 0x99ull, std::move(critic), std::nullopt,
          std::nullopt};
}

AgentCheckpoint tiny_latent_checkpoint(std::uint64_t env_dig, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Network critic = Network::glorot({kStateFeatureDim + kActionDim, 8, 1},
                                   {Activation::kTanh, Activation::kIdentity}, rng);
  Network actor = Network::glorot({kStateFeatureDim, 8, kActionDim},
                                  {Activation::kTanh, Activation::kIdentity}, rng);
  Network f =
      Network::glorot({kActionDim, 8, 4}, {Activation::kTanh, Activation::kIdentity}, rng);
  return {AgentVariant::kLatentRetrieval, 6,      env_dig, 0x99ull, std::move(critic),
          std::move(actor),               std::move(f)};
}

}  // namespace

TEST_SUITE_BEGIN("arena");

TEST_CASE("RandomPolicy plays a legal action from its decision stream") {
  RandomPolicy policy;
  CHECK(policy.name() == "random");
  CHECK_FALSE(policy.required_env_digest().has_value());
  auto states = testutil::sample_states(50, 301);
  for (const GameState& state : states) {
    std::vector<RoundAction> legal = enumerate_actions(state);
    SplitMix64 rng(77);
    RoundAction got = policy.act(state, rng);
    CHECK(std::find(legal.begin(), legal.end(), got) != legal.end());
    SplitMix64 replay_rng(77);
    CHECK(policy.act(state, replay_rng) == got);
  }
}

TEST_CASE("GreedyAttackPolicy maximizes total effective attack") {
  GreedyAttackPolicy policy;
  CHECK(policy.name() == "greedy");
  auto states = testutil::sample_states(50, 307);
  for (const GameState& state : states) {
    std::vector<RoundAction> legal = enumerate_actions(state);
    SplitMix64 rng(1);
    RoundAction got = policy.act(state, rng);

    std::size_t best = 0;
    int best_attack = total_effective_attack(state.team(0), legal[0]);
    for (std::size_t i = 1; i < legal.size(); ++i) {
      int attack = total_effective_attack(state.team(0), legal[i]);
      if (attack > best_attack) {
        best_attack = attack;
        best = i;
      }
    }
    CHECK(got == legal[best]);
  }
}

TEST_CASE("make_rule_policy builds both rule policies and rejects others") {
  CHECK(make_rule_policy("random")->name() == "random");
  CHECK(make_rule_policy("greedy")->name() == "greedy");
  CHECK_THROWS_AS(make_rule_policy("alphazero"), ConfigError);
}

TEST_CASE("battle counts games consistently and fills every record") {
  RandomPolicy a;
  RandomPolicy b;
  BattleResult result = battle(a, b, EnvConfig{}, 200, 9000);
  CHECK(result.name_a == "random");
  CHECK(result.name_b == "random");
  CHECK(result.base_seed == 9000);
  CHECK(result.games == 200);
  CHECK(result.wins + result.ties + result.losses == 200);

  int wins = 0, ties = 0, losses = 0;
  REQUIRE(result.records.size() == 200);
  for (int i = 0; i < 200; ++i) {
    const GameRecord& r = result.records[static_cast<std::size_t>(i)];
    CHECK(r.game_index == i);
    CHECK(r.seed == 9000 + static_cast<std::uint64_t>(i));
    CHECK(r.rounds >= 1);
    CHECK(r.rounds <= kDefaultRoundLimit);
    CHECK(r.discards_a >= 0);
    CHECK(r.discards_b >= 0);
    CHECK(r.replay.empty());
    if (r.result > 0)
      ++wins;
    else if (r.result < 0)
      ++losses;
    else
      ++ties;
  }
  CHECK(result.wins == wins);
  CHECK(result.ties == ties);
  CHECK(result.losses == losses);
  CHECK(result.winrate == static_cast<double>(wins) / 200.0);
  CHECK(result.standard_error ==
        std::sqrt(result.winrate * (1.0 - result.winrate) / 200.0));
  CHECK_THROWS_AS(battle(a, b, EnvConfig{}, 0, 1), UsageError);
}

TEST_CASE("battle is deterministic in the base seed") {
  RandomPolicy a;
  GreedyAttackPolicy b;
  BattleResult first = battle(a, b, EnvConfig{}, 40, 123);
  BattleResult second = battle(a, b, EnvConfig{}, 40, 123);
  CHECK(first.records == second.records);
  CHECK(first.winrate == second.winrate);

  BattleResult shifted = battle(a, b, EnvConfig{}, 40, 124);
  CHECK_FALSE(first.records == shifted.records);
}

TEST_CASE("worker count does not change battle outcomes") {
  RandomPolicy a;
  GreedyAttackPolicy b;
  BattleOptions serial;
  BattleOptions parallel;
  parallel.workers = 4;
  BattleResult one = battle(a, b, EnvConfig{}, 101, 555, serial);
  BattleResult four = battle(a, b, EnvConfig{}, 101, 555, parallel);
  CHECK(one.records == four.records);
  CHECK(one.wins == four.wins);
  CHECK(one.ties == four.ties);
}

TEST_CASE("greedy play does not lose to uniform play head to head") {
  GreedyAttackPolicy greedy;
  RandomPolicy random;
  BattleResult greedy_side = battle(greedy, random, EnvConfig{}, 300, 2026);
  BattleResult random_side = battle(random, random, EnvConfig{}, 300, 2026);
  CHECK(win_difference(greedy_side, random_side) >= 0);
  CHECK(greedy_side.wins >= greedy_side.losses);
}

TEST_CASE("replays carry one JSON line per round") {
  RandomPolicy a;
  GreedyAttackPolicy b;
  BattleOptions options;
  options.keep_replays = true;
  BattleResult result = battle(a, b, EnvConfig{}, 5, 321, options);
  for (const GameRecord& record : result.records) {
    REQUIRE_FALSE(record.replay.empty());
    std::istringstream lines(record.replay);
    std::string line;
    int n_lines = 0;
    int expected_round = 0;
    while (std::getline(lines, line)) {
      nlohmann::json parsed = nlohmann::json::parse(line);
      CHECK(parsed.at("round").get<int>() == expected_round++);
      CHECK(parsed.at("action_a").is_array());
      CHECK(parsed.at("action_b").is_array());
      CHECK(parsed.at("health").size() == 6);
      ++n_lines;
    }
    CHECK(n_lines == record.rounds);
  }
}

TEST_CASE("CheckpointPolicy plays its checkpoint greedily") {
  std::uint64_t dig = env_digest(EnvConfig{});
  auto states = testutil::sample_states(20, 311);

  CheckpointPolicy full(tiny_full_eval_checkpoint(dig, 41));
  CHECK(full.name() == "full-eval");
  REQUIRE(full.required_env_digest().has_value());
  CHECK(*full.required_env_digest() == dig);
  for (const GameState& state : states) {
    SplitMix64 rng(1);
    RoundAction got = full.act(state, rng);
    RoundAction want = select_full_eval(featurize(state), enumerate_actions(state),
                                        full.checkpoint().critic, CriticEncoding::kDouzero);
    CHECK(got == want);
  }

  CheckpointPolicy latent(tiny_latent_checkpoint(dig, 43));
  CHECK(latent.name() == "latent-retrieval");
  for (const GameState& state : states) {
    SplitMix64 rng(1);
    RoundAction got = latent.act(state, rng);
    const AgentCheckpoint& c = latent.checkpoint();
    RoundAction want = select(featurize(state), enumerate_actions(state), *c.actor, *c.embedding,
                              c.critic, c.k);
    CHECK(got == want);
  }

  AgentCheckpoint broken = tiny_latent_checkpoint(dig, 47);
  broken.actor.reset();
  CHECK_THROWS_AS(CheckpointPolicy{std::move(broken)}, ConfigError);
}

TEST_CASE("battle refuses checkpoints trained for a different env") {
  std::uint64_t dig = env_digest(EnvConfig{});
  CheckpointPolicy stale(tiny_full_eval_checkpoint(dig + 1, 53));
  RandomPolicy random;
  CHECK_THROWS_AS(battle(stale, random, EnvConfig{}, 2, 1), ConfigError);

  CheckpointPolicy fresh(tiny_full_eval_checkpoint(dig, 53));
  BattleResult result = battle(fresh, random, EnvConfig{}, 2, 1);
  CHECK(result.games == 2);
}

TEST_CASE("evaluate_vs_random is battle against the uniform rule policy") {
  std::uint64_t dig = env_digest(EnvConfig{});
  CheckpointPolicy agent(tiny_full_eval_checkpoint(dig, 59));
  BattleResult via_helper = evaluate_vs_random(agent, EnvConfig{}, 30, 777);
  RandomPolicy random;
  BattleResult direct = battle(agent, random, EnvConfig{}, 30, 777);
  CHECK(via_helper.name_b == "random");
  CHECK(via_helper.records == direct.records);
  CHECK(via_helper.wins == direct.wins);
}

TEST_CASE("win_difference compares aligned battles only") {
  GreedyAttackPolicy greedy;
  RandomPolicy random;
  BattleResult ours = battle(greedy, random, EnvConfig{}, 50, 31);
  BattleResult baseline = battle(random, random, EnvConfig{}, 50, 31);
  CHECK(win_difference(ours, baseline) == ours.wins - baseline.wins);

  BattleResult fewer = battle(random, random, EnvConfig{}, 49, 31);
  CHECK_THROWS_AS(win_difference(ours, fewer), UsageError);
  BattleResult reseeded = battle(random, random, EnvConfig{}, 50, 32);
  CHECK_THROWS_AS(win_difference(ours, reseeded), UsageError);
  BattleResult other_opponent = battle(random, greedy, EnvConfig{}, 50, 31);
  CHECK_THROWS_AS(win_difference(ours, other_opponent), UsageError);
}

TEST_CASE("battle_report is a header plus one data row") {
  GreedyAttackPolicy greedy;
  RandomPolicy random;
  BattleResult result = battle(greedy, random, EnvConfig{}, 25, 99);
  std::string report = battle_report(result);

  std::istringstream lines(report);
  std::string header, row, extra;
  REQUIRE(std::getline(lines, header));
  REQUIRE(std::getline(lines, row));
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(header == "agent_a,agent_b,base_seed,games,wins,ties,losses,winrate,standard_error");

  std::vector<std::string> fields;
  std::istringstream cells(row);
  std::string cell;
  while (std::getline(cells, cell, ',')) fields.push_back(cell);
  REQUIRE(fields.size() == 9);
  CHECK(fields[0] == "greedy");
  CHECK(fields[1] == "random");
  CHECK(fields[2] == "99");
  CHECK(fields[3] == std::to_string(result.games));
  CHECK(fields[4] == std::to_string(result.wins));
  CHECK(fields[5] == std::to_string(result.ties));
  CHECK(fields[6] == std::to_string(result.losses));
  CHECK(std::stod(fields[7]) == result.winrate);
  CHECK(std::stod(fields[8]) == result.standard_error);
}

TEST_CASE("parse_metrics round-trips rows written by metrics_row") {
  std::vector<IterationMetrics> rows{{1, 30, -1.0 / 3.0, 2.5, 0.125, 11},
                                     {2, 61, 0.4375, 1.25, -0.0625, 23},
                                     {3, 90, -0.2, 0.75, 0.03125, 31}};
  std::string text = metrics_header() + "\n";
  for (const IterationMetrics& m : rows) text += metrics_row(m) + "\n";

  std::vector<CurvePoint> points = parse_metrics(text, "latent");
  REQUIRE(points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(points[i].tag == "latent");
    CHECK(points[i].env_steps == rows[i].env_steps);
    CHECK(points[i].mean_return == rows[i].mean_return);
  }

  CHECK(parse_metrics("", "x").empty());
  CHECK(parse_metrics(metrics_header() + "\n", "x").empty());
  CHECK_THROWS_AS(parse_metrics("iteration,steps\n", "x"), ParseError);
  CHECK_THROWS_AS(parse_metrics(metrics_header() + "\n1,2,3\n", "x"), ParseError);
  CHECK_THROWS_AS(parse_metrics(metrics_header() + "\n1,abc,0.5,0.5,0.5,9\n", "x"), ParseError);
  CHECK_THROWS_AS(parse_metrics(metrics_header() + "\n1,2,nope,0.5,0.5,9\n", "x"), ParseError);
}

TEST_CASE("export_curves sorts rows by tag then steps") {
  std::vector<CurvePoint> points{{"latent", 200, 0.5},
                                 {"full-eval", 100, -0.25},
                                 {"latent", 100, 0.75},
                                 {"full-eval", 300, 1.0}};
  std::string expected =
      "tag,env_steps,mean_return\n"
      "full-eval,100,-0.25\n"
      "full-eval,300,1\n"
      "latent,100,0.75\n"
      "latent,200,0.5\n";
  CHECK(export_curves(points) == expected);
}

TEST_SUITE_END();
