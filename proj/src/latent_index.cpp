#include "miniaxie/latent_index.hpp"

#include <algorithm>

#include "miniaxie/errors.hpp"

namespace miniaxie {

CandidateSet build_candidates(std::vector<RoundAction> legal, const Network& f) {
  if (legal.empty()) throw UsageError("build_candidates: empty action set");
  if (f.input_dim() != kActionDim)
    throw UsageError("build_candidates: embedding input dim mismatch");

  CandidateSet set;
  set.actions = std::move(legal);
  set.encodings.reserve(set.actions.size());
  Matrix flat(static_cast<Eigen::Index>(set.actions.size()), kActionDim);
  for (std::size_t i = 0; i < set.actions.size(); ++i) {
    set.encodings.push_back(flatten(encode(set.actions[i])));
    for (int j = 0; j < kActionDim; ++j)
      flat(static_cast<Eigen::Index>(i), j) = set.encodings[i][static_cast<std::size_t>(j)];
  }
  set.embeddings = f.forward_batch(flat);
  return set;
}

double latent_distance(std::span<const double> e1, std::span<const double> e2) {
  if (e1.size() != e2.size()) throw UsageError("latent_distance: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < e1.size(); ++i) {
    double d = e1[i] - e2[i];
    sum += d * d;
  }
  return sum;
}

std::vector<Neighbor> topk(const CandidateSet& set, std::span<const double> raw_latent, int k) {
  if (set.size() == 0) throw UsageError("topk: empty candidate set");
  if (k < 1) throw UsageError("topk: k must be >= 1");
  if (raw_latent.size() != static_cast<std::size_t>(set.embeddings.cols()))
    throw UsageError("topk: query dimension mismatch");

  std::vector<Neighbor> all(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double* row = set.embeddings.data() + i * raw_latent.size();  // row-major
    all[i] = {i, latent_distance({row, raw_latent.size()}, raw_latent)};
  }
  auto by_distance_then_index = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
  };
  std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    by_distance_then_index);
  all.resize(keep);
  return all;
}

}  // namespace miniaxie
