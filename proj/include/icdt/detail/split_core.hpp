#pragma once

#include <cmath>
#include <optional>
#include <vector>

namespace icdt::detail {

inline double entropy_bits(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : counts) {
    if (c <= 0.0) continue;
    double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

inline double gini_impurity(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) {
    double p = c / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

inline bool is_pure(const std::vector<double>& counts) {
  int nonzero = 0;
  for (double c : counts)
    if (c > 0.0) ++nonzero;
  return nonzero <= 1;
}

struct CategoricalCandidate {
  int feature = -1;
  // per_symbol[s][k] = count of class k under symbol s
  std::vector<std::vector<double>> per_symbol;
};

struct Id3Choice {
  int feature = -1;
  double gain = 0.0;
};

// Information gain over summed counts; the exact same arithmetic backs local
// ID3 training and the count-aggregation baseline so the two build identical
// trees on identical data. Ties fall to the lowest feature index. An impure
// node splits even at zero gain; only an empty candidate list yields no
// choice.
inline std::optional<Id3Choice> select_id3_split(
    const std::vector<double>& parent_counts,
    const std::vector<CategoricalCandidate>& candidates) {
  double parent_total = 0.0;
  for (double c : parent_counts) parent_total += c;
  if (parent_total <= 0.0) return std::nullopt;
  double parent_entropy = entropy_bits(parent_counts);

  std::optional<Id3Choice> best;
  for (const auto& cand : candidates) {
    double weighted = 0.0;
    for (const auto& symbol_counts : cand.per_symbol) {
      double total = 0.0;
      for (double c : symbol_counts) total += c;
      if (total <= 0.0) continue;
      weighted += (total / parent_total) * entropy_bits(symbol_counts);
    }
    double gain = parent_entropy - weighted;
    if (!best || gain > best->gain) best = Id3Choice{cand.feature, gain};
  }
  return best;
}

}  // namespace icdt::detail
