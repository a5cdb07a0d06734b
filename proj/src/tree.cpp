#include "icdt/tree.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "icdt/detail/split_core.hpp"
#include "icdt/error.hpp"

namespace icdt {

using detail::entropy_bits;
using detail::gini_impurity;
using detail::is_pure;
using nlohmann::json;

TrainParams default_id3_params(const Schema& schema) {
  TrainParams p;
  p.max_depth = static_cast<int>((schema.feature_count() + 1) / 2);  // ceil(|F|/2)
  p.criterion = Criterion::InfoGain;
  return p;
}

TrainParams default_cart_params() {
  TrainParams p;
  p.max_depth = 5;
  p.criterion = Criterion::Gini;
  return p;
}

namespace {

std::unique_ptr<TreeNode> make_leaf(std::vector<double> dist) {
  auto node = std::make_unique<TreeNode>();
  node->dist = std::move(dist);
  return node;
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

// ---------------------------------------------------------------- ID3

std::unique_ptr<TreeNode> grow_id3(const Dataset& d, const std::vector<std::uint32_t>& rows,
                                   std::vector<char>& available, int depth,
                                   const TrainParams& params) {
  std::vector<double> counts(d.schema().class_count(), 0.0);
  for (auto r : rows) counts[d.label(r)] += 1.0;

  bool any_feature = std::find(available.begin(), available.end(), char(1)) != available.end();
  if (is_pure(counts) || depth >= params.max_depth || !any_feature) return make_leaf(counts);

  std::vector<detail::CategoricalCandidate> candidates;
  for (std::size_t f = 0; f < available.size(); ++f) {
    if (!available[f]) continue;
    detail::CategoricalCandidate cand;
    cand.feature = static_cast<int>(f);
    cand.per_symbol.assign(d.schema().features[f].arity(),
                           std::vector<double>(d.schema().class_count(), 0.0));
    for (auto r : rows) cand.per_symbol[d.symbol(r, f)][d.label(r)] += 1.0;
    candidates.push_back(std::move(cand));
  }
  auto choice = detail::select_id3_split(counts, candidates);
  if (!choice) return make_leaf(counts);

  std::size_t f = static_cast<std::size_t>(choice->feature);
  std::map<std::uint32_t, std::vector<std::uint32_t>> groups;
  for (auto r : rows) groups[d.symbol(r, f)].push_back(r);

  auto node = std::make_unique<TreeNode>();
  node->feature = choice->feature;
  available[f] = 0;
  for (auto& [symbol, subset] : groups)
    node->branches[symbol] = grow_id3(d, subset, available, depth + 1, params);
  available[f] = 1;
  return node;
}

// ---------------------------------------------------------------- CART

struct CartSplit {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

std::unique_ptr<TreeNode> grow_cart(const Dataset& d, std::vector<std::uint32_t>& rows, int depth,
                                    const TrainParams& params) {
  std::size_t K = d.schema().class_count();
  std::vector<double> counts(K, 0.0);
  for (auto r : rows) counts[d.label(r)] += 1.0;

  if (is_pure(counts) || depth >= params.max_depth ||
      rows.size() < 2 * static_cast<std::size_t>(params.min_leaf))
    return make_leaf(counts);

  double parent_gini = gini_impurity(counts);
  double n = static_cast<double>(rows.size());

  std::optional<CartSplit> best;
  std::vector<std::pair<double, std::uint32_t>> order(rows.size());
  std::vector<double> left(K);
  for (std::size_t f = 0; f < d.schema().feature_count(); ++f) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      order[i] = {d.value(rows[i], f), d.label(rows[i])};
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::fill(left.begin(), left.end(), 0.0);
    for (std::size_t i = 1; i < order.size(); ++i) {
      left[order[i - 1].second] += 1.0;
      if (order[i].first == order[i - 1].first) continue;
      double nl = static_cast<double>(i);
      double nr = n - nl;
      if (nl < params.min_leaf || nr < params.min_leaf) continue;

      double left_sq = 0.0, right_sq = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        double l = left[k];
        double r = counts[k] - l;
        left_sq += l * l;
        right_sq += r * r;
      }
      double weighted = (nl * (1.0 - left_sq / (nl * nl)) + nr * (1.0 - right_sq / (nr * nr))) / n;
      double gain = parent_gini - weighted;
      if (!best || gain > best->gain) {
        best = CartSplit{static_cast<int>(f), (order[i - 1].first + order[i].first) / 2.0, gain};
      }
    }
  }
  if (!best) return make_leaf(counts);

  std::vector<std::uint32_t> left_rows, right_rows;
  for (auto r : rows) {
    if (d.value(r, static_cast<std::size_t>(best->feature)) <= best->threshold)
      left_rows.push_back(r);
    else
      right_rows.push_back(r);
  }
  auto node = std::make_unique<TreeNode>();
  node->feature = best->feature;
  node->threshold = best->threshold;
  node->left = grow_cart(d, left_rows, depth + 1, params);
  node->right = grow_cart(d, right_rows, depth + 1, params);
  return node;
}

}  // namespace

DecisionTree train_id3(const View& view, const TrainParams& params) {
  if (view.empty()) throw TrainError("train_id3: empty view");
  const Schema& s = view.data->schema();
  for (const auto& f : s.features)
    if (f.kind != FeatureKind::Categorical)
      throw TrainError("train_id3 needs categorical features; \"" + f.name + "\" is numeric");
  std::vector<char> available(s.feature_count(), 1);
  DecisionTree tree;
  tree.kind = TreeKind::Id3;
  tree.max_depth = params.max_depth;
  tree.schema = view.data->schema_ptr();
  tree.root = grow_id3(*view.data, view.rows, available, 0, params);
  finalize_mass(*tree.root);
  return tree;
}

DecisionTree train_cart(const View& view, const TrainParams& params) {
  if (view.empty()) throw TrainError("train_cart: empty view");
  const Schema& s = view.data->schema();
  for (const auto& f : s.features)
    if (f.kind != FeatureKind::Numeric)
      throw TrainError("train_cart needs numeric features; \"" + f.name + "\" is categorical");
  std::vector<std::uint32_t> rows = view.rows;
  DecisionTree tree;
  tree.kind = TreeKind::Cart;
  tree.max_depth = params.max_depth;
  tree.schema = view.data->schema_ptr();
  tree.root = grow_cart(*view.data, rows, 0, params);
  finalize_mass(*tree.root);
  return tree;
}

namespace {

const TreeNode* route(const TreeNode* node, const DecisionTree& tree, const Dataset& d,
                      std::uint32_t row) {
  while (!node->is_leaf()) {
    std::size_t f = static_cast<std::size_t>(node->feature);
    if (tree.kind == TreeKind::Cart) {
      node = d.value(row, f) <= node->threshold ? node->left.get() : node->right.get();
      continue;
    }
    auto it = node->branches.find(d.symbol(row, f));
    if (it != node->branches.end()) {
      node = it->second.get();
    } else if (node->default_child) {
      node = node->default_child.get();
    } else {
      // unseen symbol: follow the branch holding the largest training mass
      const TreeNode* heaviest = nullptr;
      for (const auto& [sym, child] : node->branches)
        if (!heaviest || child->subtree_mass > heaviest->subtree_mass) heaviest = child.get();
      node = heaviest;
    }
  }
  return node;
}

std::uint32_t dist_argmax(const std::vector<double>& dist) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < dist.size(); ++k)
    if (dist[k] > dist[best]) best = k;
  return static_cast<std::uint32_t>(best);
}

}  // namespace

std::uint32_t predict(const DecisionTree& tree, const Dataset& d, std::uint32_t row) {
  return dist_argmax(route(tree.root.get(), tree, d, row)->dist);
}

Metrics evaluate(const DecisionTree& tree, const View& view) {
  if (view.empty()) throw TrainError("evaluate: empty view");
  std::vector<std::uint32_t> y_true, y_pred;
  y_true.reserve(view.size());
  y_pred.reserve(view.size());
  for (auto r : view.rows) {
    y_true.push_back(view.data->label(r));
    y_pred.push_back(predict(tree, *view.data, r));
  }
  return compute_metrics(y_true, y_pred, view.data->schema().class_count());
}

std::vector<Condition> explain(const DecisionTree& tree, const Dataset& d, std::uint32_t row) {
  std::vector<Condition> path;
  const TreeNode* node = tree.root.get();
  while (!node->is_leaf()) {
    std::size_t f = static_cast<std::size_t>(node->feature);
    if (tree.kind == TreeKind::Cart) {
      if (d.value(row, f) <= node->threshold) {
        path.push_back(Condition::le(node->feature, node->threshold));
        node = node->left.get();
      } else {
        path.push_back(Condition::gt(node->feature, node->threshold));
        node = node->right.get();
      }
      continue;
    }
    auto it = node->branches.find(d.symbol(row, f));
    if (it != node->branches.end()) {
      path.push_back(Condition::eq(node->feature, it->first));
      node = it->second.get();
    } else if (node->default_child) {
      node = node->default_child.get();  // no expressible condition on this edge
    } else {
      const TreeNode* heaviest = nullptr;
      for (const auto& [sym, child] : node->branches)
        if (!heaviest || child->subtree_mass > heaviest->subtree_mass) heaviest = child.get();
      node = heaviest;
    }
  }
  return path;
}

// ---------------------------------------------------------------- JSON

namespace {

json node_to_json(const TreeNode& node, TreeKind kind) {
  if (node.is_leaf()) return json{{"leaf", {{"dist", node.dist}}}};
  json split;
  split["feature"] = node.feature;
  if (kind == TreeKind::Cart) {
    split["threshold"] = node.threshold;
    split["left"] = node_to_json(*node.left, kind);
    split["right"] = node_to_json(*node.right, kind);
  } else {
    json branches = json::object();
    for (const auto& [symbol, child] : node.branches)
      branches[std::to_string(symbol)] = node_to_json(*child, kind);
    split["branches"] = std::move(branches);
    if (node.default_child) split["default"] = node_to_json(*node.default_child, kind);
  }
  return json{{"split", std::move(split)}};
}

std::unique_ptr<TreeNode> node_from_json(const json& doc, TreeKind kind, const Schema& schema,
                                         std::vector<char>& used) {
  if (doc.contains("leaf")) {
    const json& leaf = doc.at("leaf");
    auto node = std::make_unique<TreeNode>();
    node->dist = leaf.at("dist").get<std::vector<double>>();
    if (node->dist.size() != schema.class_count())
      throw LoadError("tree leaf dist size differs from class count");
    bool positive = false;
    for (double c : node->dist) {
      if (c < 0.0) throw LoadError("tree leaf dist has a negative entry");
      positive |= c > 0.0;
    }
    if (!positive) throw LoadError("tree leaf dist has no positive entry");
    return node;
  }
  if (!doc.contains("split")) throw LoadError("tree node is neither leaf nor split");
  const json& split = doc.at("split");
  int feature = split.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= schema.feature_count())
    throw LoadError("tree split references feature " + std::to_string(feature) +
                    " outside the schema");
  auto node = std::make_unique<TreeNode>();
  node->feature = feature;
  if (kind == TreeKind::Cart) {
    if (schema.features[static_cast<std::size_t>(feature)].kind != FeatureKind::Numeric)
      throw LoadError("binary split on a categorical feature");
    node->threshold = split.at("threshold").get<double>();
    if (!std::isfinite(node->threshold)) throw LoadError("non-finite split threshold");
    node->left = node_from_json(split.at("left"), kind, schema, used);
    node->right = node_from_json(split.at("right"), kind, schema, used);
    return node;
  }
  const Feature& feat = schema.features[static_cast<std::size_t>(feature)];
  if (feat.kind != FeatureKind::Categorical)
    throw LoadError("multiway split on a numeric feature");
  if (used[static_cast<std::size_t>(feature)])
    throw LoadError("feature repeats along a multiway path");
  used[static_cast<std::size_t>(feature)] = 1;
  const json& branches = split.at("branches");
  if (!branches.is_object() || branches.empty())
    throw LoadError("multiway split without branches");
  for (const auto& [key, value] : branches.items()) {
    std::size_t symbol = std::stoul(key);
    if (symbol >= feat.arity()) throw LoadError("branch symbol outside the feature's arity");
    node->branches[static_cast<std::uint32_t>(symbol)] =
        node_from_json(value, kind, schema, used);
  }
  if (split.contains("default"))
    node->default_child = node_from_json(split.at("default"), kind, schema, used);
  used[static_cast<std::size_t>(feature)] = 0;
  return node;
}

int depth_of(const TreeNode& node) {
  if (node.is_leaf()) return 0;
  int deepest = 0;
  for (const auto& [sym, child] : node.branches) deepest = std::max(deepest, depth_of(*child));
  if (node.default_child) deepest = std::max(deepest, depth_of(*node.default_child));
  if (node.left) deepest = std::max(deepest, depth_of(*node.left));
  if (node.right) deepest = std::max(deepest, depth_of(*node.right));
  return deepest + 1;
}

std::size_t leaves_of(const TreeNode& node) {
  if (node.is_leaf()) return 1;
  std::size_t total = 0;
  for (const auto& [sym, child] : node.branches) total += leaves_of(*child);
  if (node.default_child) total += leaves_of(*node.default_child);
  if (node.left) total += leaves_of(*node.left);
  if (node.right) total += leaves_of(*node.right);
  return total;
}

}  // namespace

std::string serialize(const DecisionTree& tree) {
  json doc;
  doc["kind"] = tree.kind == TreeKind::Id3 ? "id3" : "cart";
  doc["max_depth"] = tree.max_depth;
  doc["node"] = node_to_json(*tree.root, tree.kind);
  return doc.dump();
}

DecisionTree deserialize(const std::string& bytes, SchemaPtr schema) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw LoadError(std::string("tree payload is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("kind") || !doc.contains("node"))
    throw LoadError("tree payload needs kind and node");
  std::string kind_text = doc.at("kind").get<std::string>();
  DecisionTree tree;
  if (kind_text == "id3")
    tree.kind = TreeKind::Id3;
  else if (kind_text == "cart")
    tree.kind = TreeKind::Cart;
  else
    throw LoadError("unknown tree kind \"" + kind_text + "\"");
  tree.max_depth = doc.value("max_depth", 0);
  tree.schema = std::move(schema);
  try {
    std::vector<char> used(tree.schema->feature_count(), 0);
    tree.root = node_from_json(doc.at("node"), tree.kind, *tree.schema, used);
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw LoadError(std::string("malformed tree payload: ") + e.what());
  }
  finalize_mass(*tree.root);
  return tree;
}

int tree_depth(const DecisionTree& tree) { return depth_of(*tree.root); }

std::size_t leaf_count(const DecisionTree& tree) { return leaves_of(*tree.root); }

}  // namespace icdt
