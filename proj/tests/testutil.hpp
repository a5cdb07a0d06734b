#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "icdt/dataset.hpp"
#include "icdt/rng.hpp"
#include "icdt/rules.hpp"
#include "icdt/tree.hpp"

namespace icdt::test {

// ------------------------------------------------------------ dataset builders

inline SchemaPtr categorical_schema(const std::vector<std::size_t>& arities, std::size_t classes) {
  auto schema = std::make_shared<Schema>();
  for (std::size_t f = 0; f < arities.size(); ++f) {
    Feature feat;
    feat.name = "x" + std::to_string(f);
    feat.kind = FeatureKind::Categorical;
    for (std::size_t s = 0; s < arities[f]; ++s) feat.symbols.push_back("s" + std::to_string(s));
    schema->features.push_back(std::move(feat));
  }
  for (std::size_t k = 0; k < classes; ++k) schema->class_names.push_back("c" + std::to_string(k));
  return schema;
}

inline SchemaPtr numeric_schema(std::size_t features, std::size_t classes) {
  auto schema = std::make_shared<Schema>();
  for (std::size_t f = 0; f < features; ++f) {
    Feature feat;
    feat.name = "x" + std::to_string(f);
    feat.kind = FeatureKind::Numeric;
    schema->features.push_back(std::move(feat));
  }
  for (std::size_t k = 0; k < classes; ++k) schema->class_names.push_back("c" + std::to_string(k));
  return schema;
}

inline Dataset make_dataset(SchemaPtr schema, const std::vector<std::vector<double>>& rows,
                            const std::vector<std::uint32_t>& labels) {
  std::vector<double> cells;
  for (const auto& row : rows) cells.insert(cells.end(), row.begin(), row.end());
  return Dataset(std::move(schema), std::move(cells), labels);
}

inline Dataset random_categorical(std::size_t rows, const std::vector<std::size_t>& arities,
                                  std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(arities.size()));
  std::vector<std::uint32_t> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < arities.size(); ++f)
      data[r][f] = static_cast<double>(rng.below(arities[f]));
    labels[r] = static_cast<std::uint32_t>(rng.below(classes));
  }
  return make_dataset(categorical_schema(arities, classes), data, labels);
}

inline Dataset random_numeric(std::size_t rows, std::size_t features, std::size_t classes,
                              std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(features));
  std::vector<std::uint32_t> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) data[r][f] = 100.0 * rng.uniform01();
    labels[r] = static_cast<std::uint32_t>(rng.below(classes));
  }
  return make_dataset(numeric_schema(features, classes), data, labels);
}

// Labels driven by a random planted decision structure plus optional noise, so
// learners have signal to find.
inline Dataset planted_categorical(std::size_t rows, const std::vector<std::size_t>& arities,
                                   std::size_t classes, int depth, double noise,
                                   std::uint64_t seed) {
  Rng rng(seed);
  // planted rule table: map from a few feature values to a class
  std::vector<std::size_t> pivots;
  for (std::size_t f = 0; f < arities.size() && pivots.size() < static_cast<std::size_t>(depth);
       ++f)
    pivots.push_back(f);
  std::map<std::vector<std::uint32_t>, std::uint32_t> table;

  std::vector<std::vector<double>> data(rows, std::vector<double>(arities.size()));
  std::vector<std::uint32_t> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> key;
    for (std::size_t f = 0; f < arities.size(); ++f) {
      auto symbol = static_cast<std::uint32_t>(rng.below(arities[f]));
      data[r][f] = static_cast<double>(symbol);
    }
    for (auto f : pivots) key.push_back(static_cast<std::uint32_t>(data[r][f]));
    auto it = table.find(key);
    if (it == table.end())
      it = table.emplace(key, static_cast<std::uint32_t>(rng.below(classes))).first;
    labels[r] = it->second;
    if (noise > 0.0 && rng.uniform01() < noise)
      labels[r] = static_cast<std::uint32_t>(rng.below(classes));
  }
  return make_dataset(categorical_schema(arities, classes), data, labels);
}

inline Dataset planted_numeric(std::size_t rows, std::size_t features, std::size_t classes,
                               double noise, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> cut1{50.0 * (0.5 + rng.uniform01())};
  double cut2 = 50.0 * (0.5 + rng.uniform01());
  std::vector<std::vector<double>> data(rows, std::vector<double>(features));
  std::vector<std::uint32_t> labels(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t f = 0; f < features; ++f) data[r][f] = 100.0 * rng.uniform01();
    std::uint32_t cls = (data[r][0] <= cut1[0] ? 0u : 1u) ^ (data[r][1 % features] <= cut2 ? 0u : 1u);
    labels[r] = cls % classes;
    if (noise > 0.0 && rng.uniform01() < noise)
      labels[r] = static_cast<std::uint32_t>(rng.below(classes));
  }
  return make_dataset(numeric_schema(features, classes), data, labels);
}

// ------------------------------------------------------------ rule helpers

inline Rule make_rule(std::vector<Condition> conditions, std::vector<double> y_hat, int client,
                      int leaf) {
  Rule rule;
  rule.antecedent = std::move(conditions);
  rule.y_hat = std::move(y_hat);
  rule.provenance.push_back(Provenance{client, leaf});
  return rule;
}

// Canonical text key for order-normalized rule comparison.
inline std::string rule_key(const Rule& rule) {
  std::vector<std::tuple<int, int, double, std::uint32_t>> conds;
  for (const auto& c : rule.antecedent)
    conds.emplace_back(c.feature, static_cast<int>(c.op), c.bound, c.symbol);
  std::sort(conds.begin(), conds.end());
  std::ostringstream out;
  out.precision(17);
  for (const auto& [f, op, bound, symbol] : conds)
    out << f << ':' << op << ':' << bound << ':' << symbol << ';';
  out << '|';
  for (double v : rule.y_hat) out << v << ',';
  out << '|';
  for (const auto& p : rule.provenance) out << p.client << '.' << p.leaf << ',';
  return out.str();
}

inline std::vector<std::string> ruleset_keys(const RuleSet& rs) {
  std::vector<std::string> keys;
  for (const auto& r : rs.rules) keys.push_back(rule_key(r));
  std::sort(keys.begin(), keys.end());
  return keys;
}

// ------------------------------------------------------------ oracles
// Independent re-derivations used to check the library; deliberately written
// with different data structures than the implementation.

inline double oracle_entropy_of_classes(const std::vector<std::uint32_t>& classes) {
  std::map<std::uint32_t, int> hist;
  for (auto c : classes) hist[c]++;
  double h = 0.0;
  for (const auto& [cls, count] : hist) {
    double p = static_cast<double>(count) / static_cast<double>(classes.size());
    h -= p * std::log2(p);
  }
  return h;
}

inline std::uint32_t oracle_argmax(const std::vector<double>& v) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

inline double oracle_rule_entropy(const std::vector<const Rule*>& rules) {
  std::vector<std::uint32_t> classes;
  for (const Rule* r : rules) classes.push_back(oracle_argmax(r->y_hat));
  return oracle_entropy_of_classes(classes);
}

inline bool oracle_compatible_id3(const Rule& a, const Rule& b) {
  std::map<int, std::uint32_t> map_a;
  for (const auto& c : a.antecedent) map_a[c.feature] = c.symbol;
  for (const auto& c : b.antecedent) {
    auto it = map_a.find(c.feature);
    if (it != map_a.end() && it->second != c.symbol) return false;
  }
  return true;
}

struct OracleInterval {
  double lo = -std::numeric_limits<double>::infinity();  // exclusive
  double hi = std::numeric_limits<double>::infinity();   // inclusive
};

inline std::map<int, OracleInterval> oracle_intervals(const Rule& rule) {
  std::map<int, OracleInterval> out;
  for (const auto& c : rule.antecedent) {
    OracleInterval& iv = out[c.feature];
    if (c.op == Condition::Op::Le) iv.hi = std::min(iv.hi, c.bound);
    if (c.op == Condition::Op::Gt) iv.lo = std::max(iv.lo, c.bound);
  }
  return out;
}

inline bool oracle_compatible_cart(const Rule& a, const Rule& b) {
  auto ia = oracle_intervals(a);
  auto ib = oracle_intervals(b);
  for (const auto& [feature, iva] : ia) {
    if (!ib.count(feature)) continue;
    const auto& ivb = ib.at(feature);
    double lo = std::max(iva.lo, ivb.lo);
    double hi = std::min(iva.hi, ivb.hi);
    if (lo >= hi) return false;
  }
  return true;
}

// Independent pairwise merge per the published resolution: dedupe equal
// categorical atoms; per direction keep the less restrictive bound.
inline Rule oracle_merge_pair(const Rule& a, const Rule& b, TreeKind kind) {
  Rule merged;
  merged.antecedent = a.antecedent;
  for (const auto& cb : b.antecedent) {
    bool handled = false;
    for (auto& ca : merged.antecedent) {
      if (ca.feature != cb.feature) continue;
      if (kind == TreeKind::Id3) {
        handled = true;
        break;
      }
      if (ca.op != cb.op) continue;
      if (ca.op == Condition::Op::Le) ca.bound = std::max(ca.bound, cb.bound);
      if (ca.op == Condition::Op::Gt) ca.bound = std::min(ca.bound, cb.bound);
      handled = true;
      break;
    }
    if (!handled) merged.antecedent.push_back(cb);
  }
  merged.y_hat.assign(std::max(a.y_hat.size(), b.y_hat.size()), 0.0);
  for (std::size_t k = 0; k < a.y_hat.size(); ++k) merged.y_hat[k] += a.y_hat[k];
  for (std::size_t k = 0; k < b.y_hat.size(); ++k) merged.y_hat[k] += b.y_hat[k];
  std::set<std::pair<int, int>> prov;
  for (const auto& p : a.provenance) prov.insert({p.client, p.leaf});
  for (const auto& p : b.provenance) prov.insert({p.client, p.leaf});
  for (const auto& [c, l] : prov) merged.provenance.push_back(Provenance{c, l});
  return merged;
}

inline RuleSet oracle_merge_rulesets(const RuleSet& a, const RuleSet& b) {
  RuleSet out;
  out.kind = a.kind;
  out.schema = a.schema ? a.schema : b.schema;
  for (const auto& ra : a.rules) {
    for (const auto& rb : b.rules) {
      bool ok = a.kind == TreeKind::Id3 ? oracle_compatible_id3(ra, rb)
                                        : oracle_compatible_cart(ra, rb);
      if (ok) out.rules.push_back(oracle_merge_pair(ra, rb, a.kind));
    }
  }
  return out;
}

// Eq. 1 terms evaluated directly: group rules by the branch value, duplicate
// unconstrained rules everywhere, weight children by rule count.
inline double oracle_gain_multiway(const std::vector<const Rule*>& rules, int feature) {
  std::map<std::uint32_t, std::vector<const Rule*>> groups;
  std::vector<const Rule*> everywhere;
  for (const Rule* r : rules) {
    bool found = false;
    for (const auto& c : r->antecedent) {
      if (c.feature == feature && c.op == Condition::Op::Eq) {
        groups[c.symbol].push_back(r);
        found = true;
      }
    }
    if (!found) everywhere.push_back(r);
  }
  if (groups.empty()) return 0.0;
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (auto& [symbol, members] : groups) {
    std::vector<const Rule*> child = members;
    child.insert(child.end(), everywhere.begin(), everywhere.end());
    weighted_sum += static_cast<double>(child.size()) * oracle_rule_entropy(child);
    weight_total += static_cast<double>(child.size());
  }
  return oracle_rule_entropy(rules) - weighted_sum / weight_total;
}

inline double oracle_gain_binary(const std::vector<const Rule*>& rules, int feature,
                                 double threshold) {
  std::vector<const Rule*> low, high;
  for (const Rule* r : rules) {
    auto ivs = oracle_intervals(*r);
    OracleInterval iv;
    if (ivs.count(feature)) iv = ivs.at(feature);
    if (iv.lo < threshold) low.push_back(r);
    if (iv.hi > threshold) high.push_back(r);
  }
  double weighted_sum = 0.0;
  double weight_total = 0.0;
  for (const auto* side : {&low, &high}) {
    if (side->empty()) continue;
    weighted_sum += static_cast<double>(side->size()) * oracle_rule_entropy(*side);
    weight_total += static_cast<double>(side->size());
  }
  if (weight_total <= 0.0) return 0.0;
  return oracle_rule_entropy(rules) - weighted_sum / weight_total;
}

// Random rule generators for property tests.
inline Rule random_id3_rule(const Schema& schema, std::size_t classes, Rng& rng, int client,
                            int leaf) {
  Rule rule;
  std::size_t conds = rng.below(schema.feature_count()) + 1;
  std::vector<int> features(schema.feature_count());
  for (std::size_t f = 0; f < features.size(); ++f) features[f] = static_cast<int>(f);
  rng.shuffle(features);
  for (std::size_t i = 0; i < conds && i < features.size(); ++i) {
    std::size_t f = static_cast<std::size_t>(features[i]);
    rule.antecedent.push_back(Condition::eq(
        features[i], static_cast<std::uint32_t>(rng.below(schema.features[f].arity()))));
  }
  rule.y_hat.assign(classes, 0.0);
  rule.y_hat[rng.below(classes)] = static_cast<double>(1 + rng.below(40));
  if (rng.below(2)) rule.y_hat[rng.below(classes)] += static_cast<double>(rng.below(10));
  rule.provenance.push_back(Provenance{client, leaf});
  return rule;
}

inline Rule random_cart_rule(std::size_t features, std::size_t classes, Rng& rng, int client,
                             int leaf) {
  Rule rule;
  std::size_t conds = rng.below(features) + 1;
  std::vector<int> pool(features);
  for (std::size_t f = 0; f < features; ++f) pool[f] = static_cast<int>(f);
  rng.shuffle(pool);
  for (std::size_t i = 0; i < conds; ++i) {
    int f = pool[i];
    double a = std::floor(100.0 * rng.uniform01()) / 2.0;
    double b = std::floor(100.0 * rng.uniform01()) / 2.0;
    switch (rng.below(3)) {
      case 0:
        rule.antecedent.push_back(Condition::le(f, std::max(a, b)));
        break;
      case 1:
        rule.antecedent.push_back(Condition::gt(f, std::min(a, b)));
        break;
      default:
        if (a == b) b += 1.0;
        rule.antecedent.push_back(Condition::gt(f, std::min(a, b)));
        rule.antecedent.push_back(Condition::le(f, std::max(a, b)));
        break;
    }
  }
  rule.y_hat.assign(classes, 0.0);
  rule.y_hat[rng.below(classes)] = static_cast<double>(1 + rng.below(40));
  rule.provenance.push_back(Provenance{client, leaf});
  return rule;
}

}  // namespace icdt::test
