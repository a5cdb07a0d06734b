#include "icdt/dataset.hpp"

#include "icdt/error.hpp"

namespace icdt {

Dataset::Dataset(SchemaPtr schema, std::vector<double> cells, std::vector<std::uint32_t> classes)
    : schema_(std::move(schema)), cells_(std::move(cells)), classes_(std::move(classes)) {
  stride_ = schema_->feature_count();
  if (stride_ == 0) throw ConfigError("dataset needs at least one feature");
  if (cells_.size() != classes_.size() * stride_)
    throw ConfigError("cell count does not match rows x features");
  for (auto c : classes_)
    if (c >= schema_->class_count()) throw ConfigError("class index out of range");
}

}  // namespace icdt
