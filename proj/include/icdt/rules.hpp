#pragma once

#include <string>
#include <vector>

#include "icdt/condition.hpp"
#include "icdt/tree.hpp"

namespace icdt {

struct Provenance {
  int client = -1;
  int leaf = -1;

  friend bool operator==(const Provenance& a, const Provenance& b) {
    return a.client == b.client && a.leaf == b.leaf;
  }
  friend bool operator<(const Provenance& a, const Provenance& b) {
    return a.client != b.client ? a.client < b.client : a.leaf < b.leaf;
  }
};

// Conjunction of conditions plus the K-vector of class mass it predicts.
// Invariants: at most one equality per feature; at most one LE and one GT per
// feature with the GT bound below the LE bound; y_hat has a positive entry.
struct Rule {
  std::vector<Condition> antecedent;
  std::vector<double> y_hat;
  std::vector<Provenance> provenance;  // sorted, unique

  std::uint32_t argmax() const;
  double mass() const;
};

struct RuleSet {
  TreeKind kind = TreeKind::Id3;
  SchemaPtr schema;
  std::vector<Rule> rules;
};

// One rule per leaf: the root-to-leaf edge conditions (CART conditions on the
// same feature collapsed to the tightest interval) and the leaf's dist.
RuleSet extract_rules(const DecisionTree& tree, int client_id = -1);

bool covers(const Rule& rule, const Dataset& d, std::uint32_t row);

// ID3 rules conflict only when both constrain a feature to different symbols.
bool compatible_id3(const Rule& a, const Rule& b);

// CART rules are compatible when every feature constrained by both has
// intersecting implied intervals (LE inclusive, GT strict).
bool compatible_cart(const Rule& a, const Rule& b);

bool compatible(const Rule& a, const Rule& b, TreeKind kind);

// Conjunction of both antecedents with per-feature resolution (ID3: dedupe;
// CART: keep the less restrictive same-direction bound, keep both directions
// otherwise), summed y_hat, unioned provenance. Throws ContractViolation on an
// incompatible pair.
Rule merge_pair(const Rule& a, const Rule& b, TreeKind kind);

// Cartesian product: every compatible pair merged; rules with no compatible
// partner are dropped. Output is order-normalized by provenance. May be empty,
// which callers must treat as a degenerate merge.
RuleSet merge_rulesets(const RuleSet& a, const RuleSet& b);

struct TruncationEvent {
  int step = 0;
  std::size_t before = 0;
  std::size_t after = 0;
};

struct FoldMergeResult {
  RuleSet merged;
  std::vector<TruncationEvent> truncations;
};

// Left fold of merge_rulesets over sets (callers pass them in descending
// filter-score order). Intermediate sets above `cap` keep the cap rules of
// largest total mass. Throws DegenerateMergeError naming the step when a merge
// empties out.
FoldMergeResult fold_merge(const std::vector<RuleSet>& sets, std::size_t cap);

// JSON payload sent alongside the global tree: a list of
//   {"conditions": [{"feature", "op": "=="|"<="|">", "value"}, ...],
//    "y_hat": [..], "provenance": [[client, leaf], ...]}
// Categorical values carry the symbol name.
std::string serialize_rules(const RuleSet& rs);
RuleSet deserialize_rules(const std::string& bytes, TreeKind kind, SchemaPtr schema);

}  // namespace icdt
