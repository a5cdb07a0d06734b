#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace icdt {

enum class FeatureKind { Categorical, Numeric };

struct Feature {
  std::string name;
  FeatureKind kind = FeatureKind::Categorical;
  // Interned symbol names, first-appearance order. Empty for numeric features.
  std::vector<std::string> symbols;

  std::size_t arity() const { return symbols.size(); }
};

// Typed feature set plus the class vocabulary (size K).
struct Schema {
  std::vector<Feature> features;
  std::vector<std::string> class_names;

  std::size_t feature_count() const { return features.size(); }
  std::size_t class_count() const { return class_names.size(); }
};

using SchemaPtr = std::shared_ptr<const Schema>;

// Throws ConfigError on duplicate feature names or K < 2.
void validate_schema(const Schema& schema);

}  // namespace icdt
