#pragma once

#include <cstdint>
#include <vector>

#include "icdt/metrics.hpp"
#include "icdt/rules.hpp"

namespace icdt {

// scores[k][i] = metrics of tree i evaluated on client k's data. Square, with
// the self-evaluation diagonal included.
struct CrossEvalMatrix {
  std::size_t n = 0;
  std::vector<Metrics> cells;

  explicit CrossEvalMatrix(std::size_t size = 0) : n(size), cells(size * size) {}
  Metrics& at(std::size_t evaluator, std::size_t tree) { return cells[evaluator * n + tree]; }
  const Metrics& at(std::size_t evaluator, std::size_t tree) const {
    return cells[evaluator * n + tree];
  }
};

enum class FilterStatistic { Mean, Median, Percentile };
enum class FilterMetric { Accuracy, MacroF1 };

struct FilterPolicy {
  FilterStatistic statistic = FilterStatistic::Mean;
  double percentile = 50.0;  // used by FilterStatistic::Percentile
  FilterMetric metric = FilterMetric::MacroF1;
};

// score_i = mean over evaluators k of m[k][i] on the policy's metric.
std::vector<double> score_trees(const CrossEvalMatrix& m, const FilterPolicy& policy);

// Survivors = { i : score_i >= threshold } where the threshold is the mean,
// median or nearest-rank percentile of the scores. Never empty: when the rule
// would drop every tree, the single best survives.
std::vector<std::size_t> apply_filter(const std::vector<double>& scores,
                                      const FilterPolicy& policy);

// Rules at one node of the global tree under construction.
struct NodeRules {
  std::vector<const Rule*> rules;
};

// Shannon entropy (base 2) of the argmax classes of the node's rules, each
// rule counted once.
double rule_entropy(const NodeRules& node);

// Gain of a multiway split on `feature`: parent entropy minus rule-count
// weighted child entropy; children are the symbols observed among the node's
// rules and rules not constraining the feature enter every child. Zero when no
// rule constrains the feature.
double split_gain_multiway(const NodeRules& node, int feature);

// Binary counterpart: children hold the rules consistent with (<= threshold)
// and (> threshold).
double split_gain_binary(const NodeRules& node, int feature, double threshold);

// Rebuilds a single tree of the clients' kind from the merged rules: at each
// node the feature (and threshold, for CART) of highest gain splits the rules;
// leaves carry the elementwise sum of their rules' y_hat. Stops on argmax
// consensus, depth, exhausted features, or when the best split leaves every
// child as large as the node.
DecisionTree build_global_tree(const RuleSet& merged, const TrainParams& params);

}  // namespace icdt
