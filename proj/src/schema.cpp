#include "icdt/schema.hpp"

#include <unordered_set>

#include "icdt/error.hpp"

namespace icdt {

void validate_schema(const Schema& schema) {
  if (schema.class_count() < 2) throw ConfigError("schema needs at least 2 classes");
  std::unordered_set<std::string> seen;
  for (const auto& f : schema.features) {
    if (f.name.empty()) throw ConfigError("empty feature name");
    if (!seen.insert(f.name).second) throw ConfigError("duplicate feature name: " + f.name);
  }
}

}  // namespace icdt
