#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "miniaxie/env.hpp"

namespace miniaxie {

inline constexpr int kActionRows = 6;
inline constexpr int kActionDim = kActionRows * kCardTypes;  // 72
inline constexpr int kDouzeroRows = 2;
inline constexpr int kDouzeroDim = kDouzeroRows * kCardTypes;  // 24
inline constexpr std::size_t kDefaultEnumerationCap = 2'000'000;

// 6x12 binary action encoding. Column j describes global card j: rows 0-1
// are a thermometer count code (row 0 set iff >=1 copy played, row 1 iff 2),
// rows 2-5 mark which sequence positions the copies occupy.
struct ActionMatrix {
  std::array<std::uint8_t, kActionDim> bits{};  // row-major

  std::uint8_t get(int row, int col) const { return bits[row * kCardTypes + col]; }
  void set(int row, int col, std::uint8_t v) { bits[row * kCardTypes + col] = v; }

  bool operator==(const ActionMatrix&) const = default;
};

// Row-major flattening of an ActionMatrix; the real-vector action space the
// actor and critic operate in.
using FlatAction = std::array<double, kActionDim>;

// Count-only 2x12 encoding (rows 0-1 of the full matrix); drops positions.
struct DouzeroMatrix {
  std::array<std::uint8_t, kDouzeroDim> bits{};

  bool operator==(const DouzeroMatrix&) const = default;
};

// Throws CodecError when a sequence references a card of the wrong axie or
// is otherwise structurally invalid.
ActionMatrix encode(const RoundAction& action);

// Inverse of encode on legal actions. Throws CodecError on inconsistent
// count/position digits.
RoundAction decode(const ActionMatrix& matrix);

FlatAction flatten(const ActionMatrix& matrix);

// Throws CodecError unless every entry is exactly 0.0 or 1.0.
ActionMatrix unflatten(const FlatAction& flat);

DouzeroMatrix encode_douzero(const RoundAction& action);
std::array<double, kDouzeroDim> flatten(const DouzeroMatrix& matrix);

// All ordered sequences of length 0..max_len over the axie's four cards,
// respecting copies in hand and total cost <= energy_budget. Lexicographic
// order by card-id sequence with a prefix before its extensions.
std::vector<std::vector<int>> enumerate_sequences(const AxieSpec& axie,
                                                  const std::array<int, kCardsPerAxie>& hand_counts,
                                                  int energy_budget,
                                                  int max_len = kMaxSequenceLen);

// The exact legal action set U(s) for side A of `state`, canonical order.
// Throws EnumerationOverflowError when the set would exceed `cap`.
std::vector<RoundAction> enumerate_actions(const GameState& state,
                                           std::size_t cap = kDefaultEnumerationCap);

// Size of the unconstrained joint action space (full hands, no energy
// limit), computed from per-axie enumeration.
long long count_unconstrained(int max_len = kMaxSequenceLen);

// 72 space-separated 0/1 entries, for debugging dumps.
std::string matrix_text_row(const ActionMatrix& matrix);

}  // namespace miniaxie
