#pragma once

#include <iosfwd>

namespace miniaxie {

// Fast self-check: action counts, codec round-trips, top-k vs a brute-force
// oracle, gradient checks against finite differences, reward-formula cases.
// Prints one line per check; returns false if any check fails.
bool run_verification(std::ostream& out);

}  // namespace miniaxie
