#pragma once

#include <vector>

namespace oracle {

// Pair-by-pair Binder count.
inline long long binder(const std::vector<int>& a, const std::vector<int>& b) {
  long long loss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) loss += (a[i] == a[j]) != (b[i] == b[j]);
  }
  return loss;
}

// Expected loss of a candidate against the empirical pair frequencies of the
// draws, times the number of draws (an exact integer).
inline long long scaled_expected_loss(const std::vector<int>& candidate, const std::vector<std::vector<int>>& draws) {
  long long total = 0;
  for (const auto& d : draws) total += binder(candidate, d);
  return total;
}

}  // namespace oracle
