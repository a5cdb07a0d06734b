#include "icdt/rules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>

#include <nlohmann/json.hpp>

#include "icdt/error.hpp"

namespace icdt {

using nlohmann::json;

std::uint32_t Rule::argmax() const {
  std::size_t best = 0;
  for (std::size_t k = 1; k < y_hat.size(); ++k)
    if (y_hat[k] > y_hat[best]) best = k;
  return static_cast<std::uint32_t>(best);
}

double Rule::mass() const {
  double total = 0.0;
  for (double v : y_hat) total += v;
  return total;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A rule's implied interval on one feature: (gt, le].
struct Interval {
  double gt = -kInf;
  double le = kInf;
};

std::map<int, Interval> intervals_of(const Rule& rule) {
  std::map<int, Interval> out;
  for (const auto& c : rule.antecedent) {
    Interval& iv = out[c.feature];
    if (c.op == Condition::Op::Le)
      iv.le = std::min(iv.le, c.bound);
    else if (c.op == Condition::Op::Gt)
      iv.gt = std::max(iv.gt, c.bound);
  }
  return out;
}

void append_normalized(std::vector<Condition>& antecedent, const Condition& c) {
  // collapse repeated bounds on one feature to the tightest interval
  for (auto& existing : antecedent) {
    if (existing.feature != c.feature || existing.op != c.op) continue;
    if (c.op == Condition::Op::Le)
      existing.bound = std::min(existing.bound, c.bound);
    else if (c.op == Condition::Op::Gt)
      existing.bound = std::max(existing.bound, c.bound);
    return;
  }
  antecedent.push_back(c);
}

void collect_rules(const TreeNode& node, std::vector<Condition>& path, int client_id,
                   int& leaf_id, TreeKind kind, std::vector<Rule>& out) {
  if (node.is_leaf()) {
    Rule rule;
    rule.y_hat = node.dist;
    for (const auto& c : path) append_normalized(rule.antecedent, c);
    rule.provenance.push_back(Provenance{client_id, leaf_id++});
    out.push_back(std::move(rule));
    return;
  }
  if (kind == TreeKind::Cart) {
    path.push_back(Condition::le(node.feature, node.threshold));
    collect_rules(*node.left, path, client_id, leaf_id, kind, out);
    path.back() = Condition::gt(node.feature, node.threshold);
    collect_rules(*node.right, path, client_id, leaf_id, kind, out);
    path.pop_back();
    return;
  }
  for (const auto& [symbol, child] : node.branches) {
    path.push_back(Condition::eq(node.feature, symbol));
    collect_rules(*child, path, client_id, leaf_id, kind, out);
    path.pop_back();
  }
  if (node.default_child) collect_rules(*node.default_child, path, client_id, leaf_id, kind, out);
}

}  // namespace

RuleSet extract_rules(const DecisionTree& tree, int client_id) {
  RuleSet rs;
  rs.kind = tree.kind;
  rs.schema = tree.schema;
  std::vector<Condition> path;
  int leaf_id = 0;
  collect_rules(*tree.root, path, client_id, leaf_id, tree.kind, rs.rules);
  return rs;
}

bool covers(const Rule& rule, const Dataset& d, std::uint32_t row) {
  for (const auto& c : rule.antecedent)
    if (!c.holds(d, row)) return false;
  return true;
}

bool compatible_id3(const Rule& a, const Rule& b) {
  for (const auto& ca : a.antecedent) {
    for (const auto& cb : b.antecedent) {
      if (ca.feature != cb.feature) continue;
      if (ca.symbol != cb.symbol) return false;
    }
  }
  return true;
}

bool compatible_cart(const Rule& a, const Rule& b) {
  auto ia = intervals_of(a);
  auto ib = intervals_of(b);
  for (const auto& [feature, iva] : ia) {
    auto it = ib.find(feature);
    if (it == ib.end()) continue;
    double gt = std::max(iva.gt, it->second.gt);
    double le = std::min(iva.le, it->second.le);
    if (!(gt < le)) return false;  // (gt, le] empty
  }
  return true;
}

bool compatible(const Rule& a, const Rule& b, TreeKind kind) {
  return kind == TreeKind::Id3 ? compatible_id3(a, b) : compatible_cart(a, b);
}

Rule merge_pair(const Rule& a, const Rule& b, TreeKind kind) {
  if (!compatible(a, b, kind))
    throw ContractViolation("merge_pair called on an incompatible rule pair");

  Rule merged;
  merged.antecedent = a.antecedent;
  if (kind == TreeKind::Id3) {
    for (const auto& cb : b.antecedent) {
      bool seen = false;
      for (const auto& ca : merged.antecedent) seen |= ca.feature == cb.feature;
      if (!seen) merged.antecedent.push_back(cb);
    }
  } else {
    // keep the less restrictive bound per direction; opposite directions both
    // stay, giving the overlap interval
    for (const auto& cb : b.antecedent) {
      bool resolved = false;
      for (auto& ca : merged.antecedent) {
        if (ca.feature != cb.feature || ca.op != cb.op) continue;
        if (cb.op == Condition::Op::Le)
          ca.bound = std::max(ca.bound, cb.bound);
        else
          ca.bound = std::min(ca.bound, cb.bound);
        resolved = true;
        break;
      }
      if (!resolved) merged.antecedent.push_back(cb);
    }
  }

  merged.y_hat.resize(std::max(a.y_hat.size(), b.y_hat.size()), 0.0);
  for (std::size_t k = 0; k < a.y_hat.size(); ++k) merged.y_hat[k] += a.y_hat[k];
  for (std::size_t k = 0; k < b.y_hat.size(); ++k) merged.y_hat[k] += b.y_hat[k];

  merged.provenance = a.provenance;
  merged.provenance.insert(merged.provenance.end(), b.provenance.begin(), b.provenance.end());
  std::sort(merged.provenance.begin(), merged.provenance.end());
  merged.provenance.erase(std::unique(merged.provenance.begin(), merged.provenance.end()),
                          merged.provenance.end());
  return merged;
}

namespace {

// Per-feature view of an antecedent, sorted by feature, built once per rule
// per product pass (the pairwise loop is the process's cost center).
struct CompiledRule {
  std::vector<std::pair<int, std::uint32_t>> symbols;  // ID3
  std::vector<std::pair<int, Interval>> intervals;     // CART
  double mass = 0.0;
};

std::vector<CompiledRule> compile(const RuleSet& rs) {
  std::vector<CompiledRule> out(rs.rules.size());
  for (std::size_t i = 0; i < rs.rules.size(); ++i) {
    const Rule& rule = rs.rules[i];
    CompiledRule& c = out[i];
    c.mass = rule.mass();
    if (rs.kind == TreeKind::Id3) {
      for (const auto& cond : rule.antecedent)
        c.symbols.emplace_back(cond.feature, cond.symbol);
      std::sort(c.symbols.begin(), c.symbols.end());
    } else {
      for (const auto& [feature, iv] : intervals_of(rule)) c.intervals.emplace_back(feature, iv);
    }
  }
  return out;
}

bool compiled_compatible(const CompiledRule& a, const CompiledRule& b, TreeKind kind) {
  if (kind == TreeKind::Id3) {
    auto ia = a.symbols.begin();
    auto ib = b.symbols.begin();
    while (ia != a.symbols.end() && ib != b.symbols.end()) {
      if (ia->first < ib->first) {
        ++ia;
      } else if (ib->first < ia->first) {
        ++ib;
      } else {
        if (ia->second != ib->second) return false;
        ++ia;
        ++ib;
      }
    }
    return true;
  }
  auto ia = a.intervals.begin();
  auto ib = b.intervals.begin();
  while (ia != a.intervals.end() && ib != b.intervals.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      double gt = std::max(ia->second.gt, ib->second.gt);
      double le = std::min(ia->second.le, ib->second.le);
      if (!(gt < le)) return false;
      ++ia;
      ++ib;
    }
  }
  return true;
}

void sort_by_provenance(std::vector<Rule>& rules) {
  std::sort(rules.begin(), rules.end(),
            [](const Rule& x, const Rule& y) { return x.provenance < y.provenance; });
}

// Cartesian product keeping at most `cap` merged rules of largest mass
// (earliest-produced wins ties, matching a stable sort by descending mass).
// Merged mass is additive, so losing pairs are skipped before construction.
RuleSet product_capped(const RuleSet& a, const RuleSet& b, std::size_t cap,
                       std::size_t* produced_count) {
  RuleSet out;
  out.kind = a.kind;
  out.schema = a.schema ? a.schema : b.schema;

  auto ca = compile(a);
  auto cb = compile(b);

  struct Entry {
    double mass;
    std::size_t seq;
    std::size_t slot;
  };
  auto worse = [](const Entry& x, const Entry& y) {
    return x.mass != y.mass ? x.mass > y.mass : x.seq < y.seq;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(worse)> evict(worse);

  std::size_t produced = 0;
  for (std::size_t i = 0; i < a.rules.size(); ++i) {
    for (std::size_t j = 0; j < b.rules.size(); ++j) {
      if (!compiled_compatible(ca[i], cb[j], a.kind)) continue;
      double mass = ca[i].mass + cb[j].mass;
      std::size_t seq = produced++;
      if (evict.size() == cap) {
        const Entry& weakest = evict.top();
        if (mass < weakest.mass || (mass == weakest.mass && seq > weakest.seq)) continue;
        std::size_t slot = weakest.slot;
        evict.pop();
        out.rules[slot] = merge_pair(a.rules[i], b.rules[j], a.kind);
        evict.push(Entry{mass, seq, slot});
      } else {
        out.rules.push_back(merge_pair(a.rules[i], b.rules[j], a.kind));
        evict.push(Entry{mass, seq, out.rules.size() - 1});
      }
    }
  }
  if (produced_count) *produced_count = produced;
  sort_by_provenance(out.rules);
  return out;
}

}  // namespace

RuleSet merge_rulesets(const RuleSet& a, const RuleSet& b) {
  if (a.kind != b.kind) throw ContractViolation("merge_rulesets: rule sets of different kinds");
  return product_capped(a, b, std::numeric_limits<std::size_t>::max(), nullptr);
}

FoldMergeResult fold_merge(const std::vector<RuleSet>& sets, std::size_t cap) {
  if (sets.empty()) throw ContractViolation("fold_merge: no rule sets");
  FoldMergeResult result;
  result.merged = sets.front();
  for (std::size_t step = 1; step < sets.size(); ++step) {
    std::size_t produced = 0;
    result.merged = product_capped(result.merged, sets[step], cap, &produced);
    if (result.merged.rules.empty())
      throw DegenerateMergeError("all rule pairs incompatible at merge step " +
                                 std::to_string(step));
    if (produced > cap) {
      TruncationEvent ev;
      ev.step = static_cast<int>(step);
      ev.before = produced;
      ev.after = result.merged.rules.size();
      result.truncations.push_back(ev);
    }
  }
  return result;
}

// ---------------------------------------------------------------- JSON

std::string serialize_rules(const RuleSet& rs) {
  const Schema& schema = *rs.schema;
  json doc = json::array();
  for (const auto& rule : rs.rules) {
    json conditions = json::array();
    for (const auto& c : rule.antecedent) {
      json jc;
      jc["feature"] = c.feature;
      switch (c.op) {
        case Condition::Op::Eq:
          jc["op"] = "==";
          jc["value"] = schema.features[static_cast<std::size_t>(c.feature)].symbols[c.symbol];
          break;
        case Condition::Op::Le:
          jc["op"] = "<=";
          jc["value"] = c.bound;
          break;
        case Condition::Op::Gt:
          jc["op"] = ">";
          jc["value"] = c.bound;
          break;
      }
      conditions.push_back(std::move(jc));
    }
    json provenance = json::array();
    for (const auto& p : rule.provenance) provenance.push_back(json::array({p.client, p.leaf}));
    doc.push_back(json{{"conditions", std::move(conditions)},
                       {"y_hat", rule.y_hat},
                       {"provenance", std::move(provenance)}});
  }
  return doc.dump();
}

RuleSet deserialize_rules(const std::string& bytes, TreeKind kind, SchemaPtr schema) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw LoadError(std::string("rules payload is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw LoadError("rules payload must be a list");
  RuleSet rs;
  rs.kind = kind;
  rs.schema = std::move(schema);
  try {
    for (const auto& jr : doc) {
      Rule rule;
      for (const auto& jc : jr.at("conditions")) {
        int feature = jc.at("feature").get<int>();
        if (feature < 0 || static_cast<std::size_t>(feature) >= rs.schema->feature_count())
          throw LoadError("rule condition references an unknown feature");
        std::string op = jc.at("op").get<std::string>();
        const Feature& feat = rs.schema->features[static_cast<std::size_t>(feature)];
        if (op == "==") {
          std::string symbol = jc.at("value").get<std::string>();
          auto it = std::find(feat.symbols.begin(), feat.symbols.end(), symbol);
          if (it == feat.symbols.end())
            throw LoadError("rule condition references unknown symbol \"" + symbol + "\"");
          rule.antecedent.push_back(
              Condition::eq(feature, static_cast<std::uint32_t>(it - feat.symbols.begin())));
        } else if (op == "<=") {
          rule.antecedent.push_back(Condition::le(feature, jc.at("value").get<double>()));
        } else if (op == ">") {
          rule.antecedent.push_back(Condition::gt(feature, jc.at("value").get<double>()));
        } else {
          throw LoadError("rule condition has unknown op \"" + op + "\"");
        }
      }
      rule.y_hat = jr.at("y_hat").get<std::vector<double>>();
      if (jr.contains("provenance"))
        for (const auto& jp : jr.at("provenance"))
          rule.provenance.push_back(Provenance{jp.at(0).get<int>(), jp.at(1).get<int>()});
      rs.rules.push_back(std::move(rule));
    }
  } catch (const LoadError&) {
    throw;
  } catch (const std::exception& e) {
    throw LoadError(std::string("malformed rules payload: ") + e.what());
  }
  return rs;
}

}  // namespace icdt
