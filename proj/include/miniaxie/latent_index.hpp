#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "miniaxie/action_codec.hpp"
#include "miniaxie/embedding.hpp"
#include "miniaxie/env.hpp"
#include "miniaxie/nn.hpp"

namespace miniaxie {

// The legal action set of one state together with its encodings and latent
// embeddings, all in canonical enumeration order.
struct CandidateSet {
  std::vector<RoundAction> actions;
  std::vector<FlatAction> encodings;
  Matrix embeddings;  // one row per action

  std::size_t size() const { return actions.size(); }
};

// Throws UsageError on an empty action list.
CandidateSet build_candidates(std::vector<RoundAction> legal, const Network& f);

// Squared Euclidean distance d(a, a') in latent space.
double latent_distance(std::span<const double> e1, std::span<const double> e2);

struct Neighbor {
  std::size_t index = 0;  // into the candidate set
  double distance = 0.0;
};

// The min(k, |set|) candidates closest to raw_latent, ascending by
// (distance, canonical index). Exact linear scan with partial selection.
std::vector<Neighbor> topk(const CandidateSet& set, std::span<const double> raw_latent, int k);

}  // namespace miniaxie
