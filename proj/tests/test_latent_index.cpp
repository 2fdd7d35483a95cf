#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "miniaxie/errors.hpp"
#include "miniaxie/latent_index.hpp"
#include "test_util.hpp"

using namespace miniaxie;

namespace {

Network random_embedder(int latent, SplitMix64& rng) {
  return Network::glorot({kActionDim, 24, latent}, {Activation::kTanh, Activation::kIdentity},
                         rng);
}

LatentAction row_of(const CandidateSet& set, std::size_t i) {
  LatentAction e(static_cast<std::size_t>(set.embeddings.cols()));
  for (Eigen::Index j = 0; j < set.embeddings.cols(); ++j)
    e[static_cast<std::size_t>(j)] = set.embeddings(static_cast<Eigen::Index>(i), j);
  return e;
}

// Independent oracle: embed every candidate, full stable sort by
// (distance, candidate index), cut at k.
std::vector<Neighbor> brute_topk(const CandidateSet& set, const LatentAction& query, int k) {
  std::vector<Neighbor> all;
  for (std::size_t i = 0; i < set.size(); ++i)
    all.push_back({i, latent_distance(row_of(set, i), query)});
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.index < b.index;
  });
  all.resize(std::min<std::size_t>(static_cast<std::size_t>(k), all.size()));
  return all;
}

}  // namespace

TEST_SUITE_BEGIN("latent_index");

TEST_CASE("a single action builds a single embedding") {
  SplitMix64 rng(1);
  Network f = random_embedder(4, rng);
  CandidateSet set = build_candidates({RoundAction{}}, f);
  CHECK(set.size() == 1);
  CHECK(set.embeddings.rows() == 1);
  CHECK(set.embeddings.cols() == 4);
}

TEST_CASE("rebuilding with the same inputs is identical") {
  SplitMix64 rng(2);
  Network f = random_embedder(6, rng);
  auto states = testutil::sample_states(3, 5);
  auto legal = enumerate_actions(states[2]);
  CandidateSet a = build_candidates(legal, f);
  CandidateSet b = build_candidates(legal, f);
  REQUIRE(a.size() == b.size());
  CHECK(a.actions == b.actions);
  CHECK(a.encodings == b.encodings);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(row_of(a, i) == row_of(b, i));
}

TEST_CASE("embeddings match per-action embed calls in canonical order") {
  SplitMix64 rng(3);
  Network f = random_embedder(5, rng);
  auto states = testutil::sample_states(5, 7);
  auto legal = enumerate_actions(states[4]);
  CandidateSet set = build_candidates(legal, f);
  REQUIRE(set.size() == legal.size());
  for (std::size_t i = 0; i < legal.size(); ++i) {
    CHECK(set.actions[i] == legal[i]);
    CHECK(set.encodings[i] == flatten(encode(legal[i])));
    LatentAction direct = embed(f, set.encodings[i]);
    LatentAction batched = row_of(set, i);
    REQUIRE(direct.size() == batched.size());
    for (std::size_t j = 0; j < direct.size(); ++j)
      CHECK(batched[j] == doctest::Approx(direct[j]).epsilon(1e-12));
  }
}

TEST_CASE("the 125 max-length-1 joint actions build cleanly") {
  std::vector<RoundAction> actions;
  std::vector<std::vector<int>> per_axie = {{}, {0}, {1}, {2}, {3}};
  for (const auto& s0 : per_axie)
    for (const auto& s1 : per_axie)
      for (const auto& s2 : per_axie) {
        RoundAction a;
        a.sequences[0] = s0;
        for (int c : s1) a.sequences[1].push_back(c + 4);
        for (int c : s2) a.sequences[2].push_back(c + 8);
        actions.push_back(a);
      }
  REQUIRE(actions.size() == 125);
  SplitMix64 rng(4);
  CandidateSet set = build_candidates(actions, random_embedder(3, rng));
  CHECK(set.size() == 125);
  CHECK(set.embeddings.rows() == 125);
}

TEST_CASE("build_candidates rejects empty input and wrong input width") {
  SplitMix64 rng(5);
  Network f = random_embedder(4, rng);
  CHECK_THROWS_AS(build_candidates({}, f), UsageError);
  Network wrong = Network::glorot({10, 4}, {Activation::kIdentity}, rng);
  CHECK_THROWS_AS(build_candidates({RoundAction{}}, wrong), UsageError);
}

TEST_CASE("latent_distance is the squared euclidean metric") {
  CHECK(latent_distance(LatentAction{1, 0, 0}, LatentAction{1, 0, 0}) == 0.0);
  CHECK(latent_distance(LatentAction{1, 0, 0}, LatentAction{0, 1, 0}) == 2.0);
  CHECK(latent_distance(LatentAction{0, 3}, LatentAction{4, 0}) == 25.0);
  SplitMix64 rng(6);
  for (int i = 0; i < 50; ++i) {
    LatentAction a(4), b(4);
    for (auto& v : a) v = rng.gaussian();
    for (auto& v : b) v = rng.gaussian();
    CHECK(latent_distance(a, b) == latent_distance(b, a));
    CHECK(latent_distance(a, b) >= 0.0);
  }
  CHECK_THROWS_AS(latent_distance(LatentAction{1, 2}, LatentAction{1, 2, 3}), UsageError);
}

TEST_CASE("topk matches the brute-force oracle on 1000 random instances") {
  SplitMix64 rng(7);
  auto states = testutil::sample_states(250, 9);
  for (int done = 0; done < 1000; ++done) {
    const GameState& s = states[static_cast<std::size_t>(done) % states.size()];
    Network f = random_embedder(1 + static_cast<int>(rng.uniform_int(6)), rng);
    CandidateSet set = build_candidates(enumerate_actions(s), f);
    LatentAction query(static_cast<std::size_t>(set.embeddings.cols()));
    for (auto& v : query) v = rng.gaussian();
    int k = 1 + static_cast<int>(rng.uniform_int(set.size() + 2));

    auto got = topk(set, query, k);
    auto want = brute_topk(set, query, k);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].index == want[i].index);
      CHECK(got[i].distance == want[i].distance);
    }
  }
}

TEST_CASE("topk output is ascending and ties break by canonical index") {
  // Zero embedder: every action sits at the same point, so top-k must be
  // the first k candidates in canonical enumeration order.
  Network zero({kActionDim, 3}, {Activation::kIdentity});
  std::fill(zero.params().begin(), zero.params().end(), 0.0);
  auto states = testutil::sample_states(4, 11);
  CandidateSet set = build_candidates(enumerate_actions(states[3]), zero);
  auto got = topk(set, LatentAction{0.0, 0.0, 0.0}, 5);
  REQUIRE(got.size() == std::min<std::size_t>(5, set.size()));
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].index == i);
}

TEST_CASE("k larger than the set returns the whole set sorted") {
  SplitMix64 rng(13);
  Network f = random_embedder(4, rng);
  auto states = testutil::sample_states(2, 13);
  CandidateSet set = build_candidates(enumerate_actions(states[1]), f);
  LatentAction query(4, 0.25);
  auto got = topk(set, query, static_cast<int>(set.size()) + 50);
  CHECK(got.size() == set.size());
  for (std::size_t i = 1; i < got.size(); ++i) CHECK(got[i - 1].distance <= got[i].distance);
}

TEST_CASE("topk validates the query dimension and k") {
  SplitMix64 rng(17);
  Network f = random_embedder(4, rng);
  CandidateSet set = build_candidates({RoundAction{}}, f);
  CHECK_THROWS_AS(topk(set, LatentAction{1.0, 2.0}, 1), UsageError);
  CHECK_THROWS_AS(topk(set, LatentAction{1.0, 2.0, 3.0, 4.0}, 0), UsageError);
}

TEST_SUITE_END();
