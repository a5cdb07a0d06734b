#include "icdt/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "icdt/detail/split_core.hpp"
#include "icdt/error.hpp"

namespace icdt {

namespace {

double metric_of(const Metrics& m, FilterMetric metric) {
  return metric == FilterMetric::Accuracy ? m.accuracy : m.macro_f1;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// (gt, le] interval a rule implies on one feature.
struct Interval {
  double gt = -kInf;
  double le = kInf;
};

Interval interval_on(const Rule& rule, int feature) {
  Interval iv;
  for (const auto& c : rule.antecedent) {
    if (c.feature != feature) continue;
    if (c.op == Condition::Op::Le)
      iv.le = std::min(iv.le, c.bound);
    else if (c.op == Condition::Op::Gt)
      iv.gt = std::max(iv.gt, c.bound);
  }
  return iv;
}

}  // namespace

std::vector<double> score_trees(const CrossEvalMatrix& m, const FilterPolicy& policy) {
  std::vector<double> scores(m.n, 0.0);
  if (m.n == 0) return scores;
  for (std::size_t i = 0; i < m.n; ++i) {
    double total = 0.0;
    for (std::size_t k = 0; k < m.n; ++k) total += metric_of(m.at(k, i), policy.metric);
    scores[i] = total / static_cast<double>(m.n);
  }
  return scores;
}

std::vector<std::size_t> apply_filter(const std::vector<double>& scores,
                                      const FilterPolicy& policy) {
  if (scores.empty()) return {};
  double threshold = 0.0;
  switch (policy.statistic) {
    case FilterStatistic::Mean: {
      double total = 0.0;
      for (double s : scores) total += s;
      threshold = total / static_cast<double>(scores.size());
      break;
    }
    case FilterStatistic::Median: {
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      std::size_t n = sorted.size();
      threshold = n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
      break;
    }
    case FilterStatistic::Percentile: {
      std::vector<double> sorted = scores;
      std::sort(sorted.begin(), sorted.end());
      double p = std::clamp(policy.percentile, 0.0, 100.0);
      // nearest rank: smallest rank r with r/n >= p/100
      std::size_t rank = static_cast<std::size_t>(
          std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
      if (rank < 1) rank = 1;
      if (rank > sorted.size()) rank = sorted.size();
      threshold = sorted[rank - 1];
      break;
    }
  }

  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (scores[i] >= threshold) survivors.push_back(i);
  if (survivors.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    survivors.push_back(best);
  }
  return survivors;
}

double rule_entropy(const NodeRules& node) {
  std::map<std::uint32_t, double> counts;
  for (const Rule* r : node.rules) counts[r->argmax()] += 1.0;
  std::vector<double> flat;
  flat.reserve(counts.size());
  for (const auto& [cls, c] : counts) flat.push_back(c);
  return detail::entropy_bits(flat);
}

namespace {

// Children of a multiway split: per observed symbol, the rules pinned to it
// plus every rule that leaves the feature unconstrained.
std::map<std::uint32_t, NodeRules> multiway_children(const NodeRules& node, int feature) {
  std::map<std::uint32_t, NodeRules> children;
  std::vector<const Rule*> unconstrained;
  for (const Rule* r : node.rules) {
    bool constrained = false;
    for (const auto& c : r->antecedent) {
      if (c.feature == feature) {
        children[c.symbol].rules.push_back(r);
        constrained = true;
        break;
      }
    }
    if (!constrained) unconstrained.push_back(r);
  }
  for (auto& [symbol, child] : children)
    child.rules.insert(child.rules.end(), unconstrained.begin(), unconstrained.end());
  return children;
}

struct BinaryChildren {
  NodeRules le, gt;
};

BinaryChildren binary_children(const NodeRules& node, int feature, double threshold) {
  BinaryChildren out;
  for (const Rule* r : node.rules) {
    Interval iv = interval_on(*r, feature);
    if (iv.gt < threshold) out.le.rules.push_back(r);   // intersects (-inf, threshold]
    if (iv.le > threshold) out.gt.rules.push_back(r);   // intersects (threshold, +inf)
  }
  return out;
}

double weighted_child_entropy(const std::vector<const NodeRules*>& children) {
  double weighted = 0.0;
  double total = 0.0;
  for (const NodeRules* child : children) {
    double size = static_cast<double>(child->rules.size());
    if (size <= 0.0) continue;
    weighted += size * rule_entropy(*child);
    total += size;
  }
  return total > 0.0 ? weighted / total : 0.0;
}

}  // namespace

double split_gain_multiway(const NodeRules& node, int feature) {
  auto children = multiway_children(node, feature);
  if (children.empty()) return 0.0;
  std::vector<const NodeRules*> flat;
  flat.reserve(children.size());
  for (const auto& [symbol, child] : children) flat.push_back(&child);
  return rule_entropy(node) - weighted_child_entropy(flat);
}

double split_gain_binary(const NodeRules& node, int feature, double threshold) {
  BinaryChildren children = binary_children(node, feature, threshold);
  return rule_entropy(node) - weighted_child_entropy({&children.le, &children.gt});
}

namespace {

std::vector<double> summed_mass(const NodeRules& node, std::size_t class_count) {
  std::vector<double> dist(class_count, 0.0);
  for (const Rule* r : node.rules)
    for (std::size_t k = 0; k < r->y_hat.size() && k < class_count; ++k) dist[k] += r->y_hat[k];
  return dist;
}

bool argmax_consensus(const NodeRules& node) {
  if (node.rules.empty()) return true;
  std::uint32_t first = node.rules.front()->argmax();
  for (const Rule* r : node.rules)
    if (r->argmax() != first) return false;
  return true;
}

std::unique_ptr<TreeNode> leaf_from(const NodeRules& node, std::size_t class_count) {
  auto leaf = std::make_unique<TreeNode>();
  leaf->dist = summed_mass(node, class_count);
  return leaf;
}

std::unique_ptr<TreeNode> grow_multiway(const NodeRules& node, std::vector<char>& available,
                                        int depth, const TrainParams& params,
                                        std::size_t class_count) {
  bool any_feature = std::find(available.begin(), available.end(), char(1)) != available.end();
  if (argmax_consensus(node) || depth >= params.max_depth || !any_feature)
    return leaf_from(node, class_count);

  int best_feature = -1;
  double best_gain = -kInf;
  for (std::size_t f = 0; f < available.size(); ++f) {
    if (!available[f]) continue;
    auto children = multiway_children(node, static_cast<int>(f));
    if (children.empty()) continue;
    std::vector<const NodeRules*> flat;
    for (const auto& [symbol, child] : children) flat.push_back(&child);
    double gain = rule_entropy(node) - weighted_child_entropy(flat);
    if (best_feature < 0 || gain > best_gain) {
      best_feature = static_cast<int>(f);
      best_gain = gain;
    }
  }
  if (best_feature < 0) return leaf_from(node, class_count);

  auto children = multiway_children(node, best_feature);
  bool reduces = false;
  for (const auto& [symbol, child] : children) reduces |= child.rules.size() < node.rules.size();
  if (!reduces) return leaf_from(node, class_count);

  auto internal = std::make_unique<TreeNode>();
  internal->feature = best_feature;
  available[static_cast<std::size_t>(best_feature)] = 0;
  for (auto& [symbol, child] : children)
    internal->branches[symbol] = grow_multiway(child, available, depth + 1, params, class_count);
  // unseen symbols at prediction time fall to the mass the node leaves
  // unconstrained on this feature
  NodeRules unconstrained;
  for (const Rule* r : node.rules) {
    bool constrains = false;
    for (const auto& c : r->antecedent) constrains |= c.feature == best_feature;
    if (!constrains) unconstrained.rules.push_back(r);
  }
  if (!unconstrained.rules.empty())
    internal->default_child = leaf_from(unconstrained, class_count);
  available[static_cast<std::size_t>(best_feature)] = 1;
  return internal;
}

std::unique_ptr<TreeNode> grow_binary(const NodeRules& node, int depth, const TrainParams& params,
                                      std::size_t class_count) {
  if (argmax_consensus(node) || depth >= params.max_depth) return leaf_from(node, class_count);

  // candidate cuts: every bound the node's rules place on each feature
  std::map<int, std::set<double>> bounds;
  for (const Rule* r : node.rules)
    for (const auto& c : r->antecedent)
      if (c.op != Condition::Op::Eq) bounds[c.feature].insert(c.bound);

  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = -kInf;
  double parent_entropy = rule_entropy(node);
  for (const auto& [feature, cuts] : bounds) {
    for (double t : cuts) {
      BinaryChildren children = binary_children(node, feature, t);
      if (children.le.rules.empty() || children.gt.rules.empty()) continue;
      double gain = parent_entropy - weighted_child_entropy({&children.le, &children.gt});
      if (best_feature < 0 || gain > best_gain) {
        best_feature = feature;
        best_threshold = t;
        best_gain = gain;
      }
    }
  }
  if (best_feature < 0) return leaf_from(node, class_count);

  BinaryChildren children = binary_children(node, best_feature, best_threshold);
  if (children.le.rules.size() >= node.rules.size() &&
      children.gt.rules.size() >= node.rules.size())
    return leaf_from(node, class_count);

  auto internal = std::make_unique<TreeNode>();
  internal->feature = best_feature;
  internal->threshold = best_threshold;
  internal->left = grow_binary(children.le, depth + 1, params, class_count);
  internal->right = grow_binary(children.gt, depth + 1, params, class_count);
  return internal;
}

double finalize_mass(TreeNode& node) {
  if (node.is_leaf()) {
    node.subtree_mass = 0.0;
    for (double c : node.dist) node.subtree_mass += c;
    return node.subtree_mass;
  }
  double total = 0.0;
  for (auto& [sym, child] : node.branches) total += finalize_mass(*child);
  if (node.default_child) total += finalize_mass(*node.default_child);
  if (node.left) total += finalize_mass(*node.left);
  if (node.right) total += finalize_mass(*node.right);
  node.subtree_mass = total;
  return total;
}

}  // namespace

DecisionTree build_global_tree(const RuleSet& merged, const TrainParams& params) {
  if (merged.rules.empty()) throw DegenerateMergeError("build_global_tree: empty rule set");
  DecisionTree tree;
  tree.kind = merged.kind;
  tree.max_depth = params.max_depth;
  tree.schema = merged.schema;

  NodeRules root;
  root.rules.reserve(merged.rules.size());
  for (const auto& r : merged.rules) root.rules.push_back(&r);

  std::size_t class_count = merged.schema->class_count();
  if (merged.kind == TreeKind::Id3) {
    std::vector<char> available(merged.schema->feature_count(), 1);
    tree.root = grow_multiway(root, available, 0, params, class_count);
  } else {
    tree.root = grow_binary(root, 0, params, class_count);
  }
  finalize_mass(*tree.root);
  return tree;
}

}  // namespace icdt
