#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "icdt/condition.hpp"
#include "icdt/dataset.hpp"
#include "icdt/metrics.hpp"

namespace icdt {

enum class TreeKind { Id3, Cart };
enum class Criterion { InfoGain, Gini };

struct TrainParams {
  int max_depth = 5;
  Criterion criterion = Criterion::Gini;
  int min_leaf = 1;
};

// ID3 pairs with information gain and depth ceil(|F|/2); CART with Gini and
// depth 5.
TrainParams default_id3_params(const Schema& schema);
TrainParams default_cart_params();

struct TreeNode {
  // Leaf: raw class counts (or summed rule mass for rebuilt global trees).
  std::vector<double> dist;

  // Internal node.
  int feature = -1;
  std::map<std::uint32_t, std::unique_ptr<TreeNode>> branches;  // ID3: symbol -> child
  std::unique_ptr<TreeNode> default_child;  // ID3 rebuilt trees: unconstrained mass
  double threshold = 0.0;                   // CART
  std::unique_ptr<TreeNode> left, right;    // CART: <= threshold / > threshold

  double subtree_mass = 0.0;  // cached; drives unseen-symbol routing

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  TreeKind kind = TreeKind::Id3;
  int max_depth = 0;
  SchemaPtr schema;
  std::unique_ptr<TreeNode> root;
};

// Multiway tree over categorical features, split by information gain; a
// feature never repeats along a path. Leaf dist = class counts of the rows
// reaching it. Throws TrainError on an empty view.
DecisionTree train_id3(const View& view, const TrainParams& params);

// Binary tree over numeric features; thresholds are midpoints between
// consecutive distinct sorted values minimizing weighted Gini.
DecisionTree train_cart(const View& view, const TrainParams& params);

// Argmax of the reached leaf's dist, lowest class index on ties. A symbol
// unseen at an ID3 node routes to the default child when present, otherwise
// to the child holding the largest training mass.
std::uint32_t predict(const DecisionTree& tree, const Dataset& d, std::uint32_t row);

// Accuracy and macro-F1 of the tree over a view. Throws TrainError when empty.
Metrics evaluate(const DecisionTree& tree, const View& view);

// Root-to-leaf conjunction the row satisfies.
std::vector<Condition> explain(const DecisionTree& tree, const Dataset& d, std::uint32_t row);

// JSON payload exchanged in the protocol:
//   {"kind": "id3"|"cart", "max_depth": N, "node": ...}
//   node := {"leaf": {"dist": [..]}}
//         | {"split": {"feature": i, "branches": {"<symbol index>": node, ...}
//                      [, "default": node]}}
//         | {"split": {"feature": i, "threshold": t, "left": node, "right": node}}
std::string serialize(const DecisionTree& tree);
DecisionTree deserialize(const std::string& bytes, SchemaPtr schema);

// Longest root-to-leaf chain of internal nodes.
int tree_depth(const DecisionTree& tree);
std::size_t leaf_count(const DecisionTree& tree);

}  // namespace icdt
