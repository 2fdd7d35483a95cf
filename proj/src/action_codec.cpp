#include "miniaxie/action_codec.hpp"

#include <algorithm>
#include <sstream>

#include "miniaxie/errors.hpp"

namespace miniaxie {

ActionMatrix encode(const RoundAction& action) {
  ActionMatrix matrix;
  std::array<int, kCardTypes> copies{};
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    const auto& seq = action.sequences[a];
    if (seq.size() > kMaxSequenceLen)
      throw CodecError("sequence for axie " + std::to_string(a) + " longer than 4");
    for (std::size_t pos = 0; pos < seq.size(); ++pos) {
      int card_id = seq[pos];
      if (card_id < 0 || card_id >= kCardTypes)
        throw CodecError("card id " + std::to_string(card_id) + " out of range");
      if (card_id / kCardsPerAxie != a)
        throw CodecError("card " + std::to_string(card_id) + " does not belong to axie " +
                         std::to_string(a));
      if (++copies[card_id] > kCopiesPerCard)
        throw CodecError("card " + std::to_string(card_id) + " appears more than twice");
      matrix.set(2 + static_cast<int>(pos), card_id, 1);
    }
  }
  for (int card = 0; card < kCardTypes; ++card) {
    if (copies[card] >= 1) matrix.set(0, card, 1);
    if (copies[card] >= 2) matrix.set(1, card, 1);
  }
  return matrix;
}

RoundAction decode(const ActionMatrix& matrix) {
  for (std::uint8_t bit : matrix.bits)
    if (bit > 1) throw CodecError("matrix entries must be 0 or 1");

  RoundAction action;
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    // Position p of axie a's sequence is claimed by at most one of its cards.
    std::array<int, kMaxSequenceLen> owner;
    owner.fill(-1);
    for (int local = 0; local < kCardsPerAxie; ++local) {
      int card = a * kCardsPerAxie + local;
      for (int pos = 0; pos < kMaxSequenceLen; ++pos) {
        if (!matrix.get(2 + pos, card)) continue;
        if (owner[pos] != -1)
          throw CodecError("cards " + std::to_string(owner[pos]) + " and " +
                           std::to_string(card) + " both claim position " +
                           std::to_string(pos) + " of axie " + std::to_string(a));
        owner[pos] = card;
      }
    }
    auto& seq = action.sequences[a];
    for (int pos = 0; pos < kMaxSequenceLen; ++pos) {
      if (owner[pos] == -1) {
        for (int rest = pos + 1; rest < kMaxSequenceLen; ++rest)
          if (owner[rest] != -1)
            throw CodecError("axie " + std::to_string(a) + " has a gap at position " +
                             std::to_string(pos));
        break;
      }
      seq.push_back(owner[pos]);
    }
  }

  // Count digits must agree with the positional occupancy.
  for (int card = 0; card < kCardTypes; ++card) {
    int row0 = matrix.get(0, card);
    int row1 = matrix.get(1, card);
    if (row1 && !row0)
      throw CodecError("column " + std::to_string(card) +
                       " has count digits (0,1), violating the thermometer code");
    int claimed = row0 + row1;
    int occupied = 0;
    for (int pos = 0; pos < kMaxSequenceLen; ++pos) occupied += matrix.get(2 + pos, card);
    if (claimed != occupied)
      throw CodecError("column " + std::to_string(card) + " count digits say " +
                       std::to_string(claimed) + " copies but " + std::to_string(occupied) +
                       " positions are set");
  }
  return action;
}

FlatAction flatten(const ActionMatrix& matrix) {
  FlatAction flat;
  for (int i = 0; i < kActionDim; ++i) flat[i] = static_cast<double>(matrix.bits[i]);
  return flat;
}

ActionMatrix unflatten(const FlatAction& flat) {
  ActionMatrix matrix;
  for (int i = 0; i < kActionDim; ++i) {
    if (flat[i] == 0.0)
      matrix.bits[i] = 0;
    else if (flat[i] == 1.0)
      matrix.bits[i] = 1;
    else
      throw CodecError("flat action entry " + std::to_string(i) + " is not 0 or 1");
  }
  return matrix;
}

DouzeroMatrix encode_douzero(const RoundAction& action) {
  ActionMatrix full = encode(action);
  DouzeroMatrix matrix;
  std::copy_n(full.bits.begin(), kDouzeroDim, matrix.bits.begin());
  return matrix;
}

std::array<double, kDouzeroDim> flatten(const DouzeroMatrix& matrix) {
  std::array<double, kDouzeroDim> flat;
  for (int i = 0; i < kDouzeroDim; ++i) flat[i] = static_cast<double>(matrix.bits[i]);
  return flat;
}

namespace {

void extend_sequences(const AxieSpec& axie, std::array<int, kCardsPerAxie>& remaining,
                      int budget, int max_len, std::vector<int>& prefix,
                      std::vector<std::vector<int>>& out) {
  out.push_back(prefix);
  if (static_cast<int>(prefix.size()) >= max_len) return;
  for (int local = 0; local < kCardsPerAxie; ++local) {
    int cost = axie.cards[local].cost;
    if (remaining[local] <= 0 || cost > budget) continue;
    --remaining[local];
    prefix.push_back(axie.cards[local].card_id);
    extend_sequences(axie, remaining, budget - cost, max_len, prefix, out);
    prefix.pop_back();
    ++remaining[local];
  }
}

}  // namespace

std::vector<std::vector<int>> enumerate_sequences(const AxieSpec& axie,
                                                  const std::array<int, kCardsPerAxie>& hand_counts,
                                                  int energy_budget, int max_len) {
  std::vector<std::vector<int>> out;
  std::array<int, kCardsPerAxie> remaining = hand_counts;
  for (int& r : remaining) r = std::clamp(r, 0, kCopiesPerCard);
  std::vector<int> prefix;
  extend_sequences(axie, remaining, energy_budget, max_len, prefix, out);
  return out;
}

std::vector<RoundAction> enumerate_actions(const GameState& state, std::size_t cap) {
  if (state.terminal) throw UsageError("cannot enumerate actions of a terminal state");
  const TeamSpec& team = state.team(0);
  const PlayerState& player = state.players[0];

  std::array<std::vector<std::vector<int>>, kAxiesPerTeam> per_axie;
  std::array<std::vector<int>, kAxiesPerTeam> costs;
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    if (!state.axie_alive(a)) {
      per_axie[a] = {{}};
    } else {
      std::array<int, kCardsPerAxie> hand{};
      for (int c = 0; c < kCardsPerAxie; ++c) hand[c] = player.hand[a * kCardsPerAxie + c];
      per_axie[a] = enumerate_sequences(team.axies[a], hand, player.energy);
    }
    costs[a].reserve(per_axie[a].size());
    for (const auto& seq : per_axie[a]) {
      int cost = 0;
      for (int card_id : seq) cost += team.card(card_id).cost;
      costs[a].push_back(cost);
    }
  }

  std::vector<RoundAction> out;
  for (std::size_t i = 0; i < per_axie[0].size(); ++i) {
    int cost0 = costs[0][i];
    if (cost0 > player.energy) continue;
    for (std::size_t j = 0; j < per_axie[1].size(); ++j) {
      int cost01 = cost0 + costs[1][j];
      if (cost01 > player.energy) continue;
      for (std::size_t k = 0; k < per_axie[2].size(); ++k) {
        if (cost01 + costs[2][k] > player.energy) continue;
        if (out.size() >= cap)
          throw EnumerationOverflowError("legal action set exceeds cap of " +
                                         std::to_string(cap));
        RoundAction action;
        action.sequences[0] = per_axie[0][i];
        action.sequences[1] = per_axie[1][j];
        action.sequences[2] = per_axie[2][k];
        out.push_back(std::move(action));
      }
    }
  }
  return out;
}

long long count_unconstrained(int max_len) {
  const TeamSpec team = default_team();
  std::array<int, kCardsPerAxie> full_hand;
  full_hand.fill(kCopiesPerCard);
  long long total = 1;
  for (int a = 0; a < kAxiesPerTeam; ++a) {
    auto sequences =
        enumerate_sequences(team.axies[a], full_hand, /*energy_budget=*/1 << 30, max_len);
    total *= static_cast<long long>(sequences.size());
  }
  return total;
}

std::string matrix_text_row(const ActionMatrix& matrix) {
  std::ostringstream out;
  for (int i = 0; i < kActionDim; ++i) {
    if (i) out << ' ';
    out << static_cast<int>(matrix.bits[i]);
  }
  return out.str();
}

}  // namespace miniaxie
