#include "icdt/fedid3.hpp"

#include <algorithm>

#include "icdt/detail/split_core.hpp"
#include "icdt/error.hpp"

namespace icdt {

CountReply client_counts(const CountClient& client, const CountQuery& query) {
  const Dataset& d = *client.view.data;
  const Schema& s = d.schema();
  std::size_t f = static_cast<std::size_t>(query.target_feature);
  CountReply reply;
  reply.counts.assign(s.features[f].arity(), std::vector<double>(s.class_count(), 0.0));
  for (auto r : client.view.rows) {
    bool match = true;
    for (const auto& c : query.constraints) {
      if (!c.holds(d, r)) {
        match = false;
        break;
      }
    }
    if (match) reply.counts[d.symbol(r, f)][d.label(r)] += 1.0;
  }
  return reply;
}

namespace {

struct NodeTask {
  std::vector<Condition> constraints;
  std::vector<char> available;
  int depth = 0;
  std::vector<double> counts;         // class counts at this node
  std::vector<double> parent_counts;  // fallback for empty nodes
  TreeNode* slot = nullptr;
};

std::vector<std::vector<double>> summed_counts(const std::vector<CountClient>& clients,
                                               const CountQuery& query, std::size_t arity,
                                               std::size_t class_count, FedId3Stats* stats) {
  std::vector<std::vector<double>> total(arity, std::vector<double>(class_count, 0.0));
  for (const auto& client : clients) {
    CountReply reply = client_counts(client, query);
    for (std::size_t s = 0; s < arity; ++s)
      for (std::size_t k = 0; k < class_count; ++k) total[s][k] += reply.counts[s][k];
    if (stats) ++stats->queries;
  }
  return total;
}

void make_leaf(TreeNode* slot, const NodeTask& task) {
  bool empty = true;
  for (double c : task.counts) empty &= c <= 0.0;
  if (!empty) {
    slot->dist = task.counts;
    return;
  }
  // no row reached this node on any client: fall back to the parent majority
  std::size_t best = 0;
  for (std::size_t k = 1; k < task.parent_counts.size(); ++k)
    if (task.parent_counts[k] > task.parent_counts[best]) best = k;
  slot->dist.assign(task.parent_counts.size(), 0.0);
  slot->dist[best] = 1.0;
}

double finalize_mass(TreeNode& node) {
  if (node.is_leaf()) {
    node.subtree_mass = 0.0;
    for (double c : node.dist) node.subtree_mass += c;
    return node.subtree_mass;
  }
  double total = 0.0;
  for (auto& [sym, child] : node.branches) total += finalize_mass(*child);
  node.subtree_mass = total;
  return total;
}

}  // namespace

DecisionTree fedid3_build(const std::vector<CountClient>& clients, SchemaPtr schema,
                          int max_depth, FedId3Stats* stats) {
  if (clients.empty()) throw TrainError("fedid3_build: no clients");
  for (const auto& f : schema->features)
    if (f.kind != FeatureKind::Categorical)
      throw TrainError("fedid3_build needs categorical features; \"" + f.name + "\" is numeric");

  std::size_t class_count = schema->class_count();

  DecisionTree tree;
  tree.kind = TreeKind::Id3;
  tree.max_depth = max_depth;
  tree.schema = schema;
  tree.root = std::make_unique<TreeNode>();

  // root class counts from one bootstrap query
  CountQuery root_query;
  root_query.target_feature = 0;
  auto root_counts_by_symbol = summed_counts(clients, root_query, schema->features[0].arity(),
                                             class_count, stats);
  if (stats) ++stats->query_batches;
  std::vector<double> root_counts(class_count, 0.0);
  for (const auto& symbol_counts : root_counts_by_symbol)
    for (std::size_t k = 0; k < class_count; ++k) root_counts[k] += symbol_counts[k];

  NodeTask root_task;
  root_task.available.assign(schema->feature_count(), 1);
  root_task.counts = root_counts;
  root_task.parent_counts = root_counts;
  root_task.slot = tree.root.get();

  std::vector<NodeTask> level;
  level.push_back(std::move(root_task));

  while (!level.empty()) {
    if (stats) ++stats->query_batches;
    std::vector<NodeTask> next;
    for (auto& task : level) {
      bool any_feature =
          std::find(task.available.begin(), task.available.end(), char(1)) != task.available.end();
      if (detail::is_pure(task.counts) || task.depth >= max_depth || !any_feature) {
        make_leaf(task.slot, task);
        continue;
      }

      std::vector<detail::CategoricalCandidate> candidates;
      for (std::size_t f = 0; f < task.available.size(); ++f) {
        if (!task.available[f]) continue;
        CountQuery q;
        q.constraints = task.constraints;
        q.target_feature = static_cast<int>(f);
        detail::CategoricalCandidate cand;
        cand.feature = static_cast<int>(f);
        cand.per_symbol =
            summed_counts(clients, q, schema->features[f].arity(), class_count, stats);
        candidates.push_back(std::move(cand));
      }
      auto choice = detail::select_id3_split(task.counts, candidates);
      if (!choice) {
        make_leaf(task.slot, task);
        continue;
      }

      const detail::CategoricalCandidate* chosen = nullptr;
      for (const auto& cand : candidates)
        if (cand.feature == choice->feature) chosen = &cand;

      task.slot->feature = choice->feature;
      for (std::uint32_t s = 0; s < chosen->per_symbol.size(); ++s) {
        double total = 0.0;
        for (double c : chosen->per_symbol[s]) total += c;
        if (total <= 0.0) continue;
        auto child = std::make_unique<TreeNode>();
        NodeTask child_task;
        child_task.constraints = task.constraints;
        child_task.constraints.push_back(Condition::eq(choice->feature, s));
        child_task.available = task.available;
        child_task.available[static_cast<std::size_t>(choice->feature)] = 0;
        child_task.depth = task.depth + 1;
        child_task.counts = chosen->per_symbol[s];
        child_task.parent_counts = task.counts;
        child_task.slot = child.get();
        task.slot->branches[s] = std::move(child);
        next.push_back(std::move(child_task));
      }
    }
    level = std::move(next);
  }

  finalize_mass(*tree.root);
  return tree;
}

}  // namespace icdt
