#pragma once

#include <optional>
#include <string>
#include <vector>

#include "icdt/dataset.hpp"

namespace icdt {

// Declarative description of one CSV dataset, loaded from a small JSON file:
//   {
//     "path": "nursery.csv",
//     "features": [{"name": "parents", "kind": "categorical"}, ...],
//     "class_column": "class",            // optional, default: last column
//     "class_names": ["not_recom", ...],  // optional, interned when absent
//     "header": true                      // optional, default true
//   }
// Relative paths resolve against the manifest's directory, then ICDT_DATA_DIR.
struct DatasetManifest {
  std::string csv_path;
  std::vector<Feature> features;  // kinds only; symbols filled during load
  std::optional<std::string> class_column;
  std::vector<std::string> class_names;
  bool header = true;
};

DatasetManifest load_manifest(const std::string& path);

// Loads the manifest's CSV into a Dataset. Categorical symbols are interned in
// first-appearance order; class labels likewise unless the manifest pins them.
Dataset load_dataset(const DatasetManifest& manifest);

// Header row must list the hint's feature names followed by the class column.
// Errors name the offending line.
Dataset load_csv(const std::string& path, const Schema& schema_hint,
                 const std::string& class_column = "class", bool header = true);

// Test-support serializer; load_csv(write_csv(d)) is the identity.
void write_csv(const Dataset& d, const std::string& path,
               const std::string& class_column = "class");

}  // namespace icdt
