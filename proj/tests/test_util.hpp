#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "miniaxie/action_codec.hpp"
#include "miniaxie/env.hpp"
#include "miniaxie/rng.hpp"

namespace testutil {

using namespace miniaxie;

// Non-terminal states reached by uniform-random play from seeded fresh games.
inline std::vector<GameState> sample_states(int n_states, std::uint64_t seed) {
  std::vector<GameState> out;
  out.reserve(n_states);
  std::uint64_t game = 0;
  while ((int)out.size() < n_states) {
    GameState s = new_game(EnvConfig{}, mix_seed(seed, game));
    SplitMix64 pa(mix_seed(seed, 2 * game));
    SplitMix64 pb(mix_seed(seed, 2 * game + 1));
    while (!s.terminal && (int)out.size() < n_states) {
      out.push_back(s);
      auto legal = enumerate_actions(s);
      auto b = rule_based_opponent(mirrored(s), pb);
      s = step_two_player(s, legal[pa.uniform_int(legal.size())], b).state;
    }
    ++game;
  }
  return out;
}

inline RoundAction make_action(std::vector<int> seq0, std::vector<int> seq1 = {},
                               std::vector<int> seq2 = {}) {
  RoundAction a;
  a.sequences[0] = std::move(seq0);
  a.sequences[1] = std::move(seq1);
  a.sequences[2] = std::move(seq2);
  return a;
}

// Canonical ordering: lexicographic by card-id sequence, prefixes first.
inline bool seq_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

inline bool action_less(const RoundAction& a, const RoundAction& b) {
  for (int i = 0; i < kAxiesPerTeam; ++i) {
    if (a.sequences[i] != b.sequences[i]) return seq_less(a.sequences[i], b.sequences[i]);
  }
  return false;
}

// Fresh directory under the build tree; removed on destruction.
struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag = "t") {
    path = std::filesystem::temp_directory_path() /
           ("miniaxie_test_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline std::string slurp(const std::string& path) {
  std::string out;
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, fp)) > 0) out.append(buf, n);
  std::fclose(fp);
  return out;
}

}  // namespace testutil
