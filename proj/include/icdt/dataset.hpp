#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "icdt/schema.hpp"

namespace icdt {

// Immutable table of typed rows. Categorical cells hold the interned symbol
// index; numeric cells hold the raw value. Partitions and folds are index
// views into one shared Dataset.
class Dataset {
public:
  Dataset(SchemaPtr schema, std::vector<double> cells, std::vector<std::uint32_t> classes);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }

  std::size_t row_count() const { return classes_.size(); }
  std::size_t feature_count() const { return schema_->feature_count(); }

  double value(std::size_t row, std::size_t feature) const {
    return cells_[row * stride_ + feature];
  }
  std::uint32_t symbol(std::size_t row, std::size_t feature) const {
    return static_cast<std::uint32_t>(value(row, feature));
  }
  std::uint32_t label(std::size_t row) const { return classes_[row]; }

private:
  SchemaPtr schema_;
  std::vector<double> cells_;
  std::vector<std::uint32_t> classes_;
  std::size_t stride_ = 0;
};

// Non-owning subset of a dataset's rows.
struct View {
  const Dataset* data = nullptr;
  std::vector<std::uint32_t> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

inline View full_view(const Dataset& d) {
  View v;
  v.data = &d;
  v.rows.resize(d.row_count());
  for (std::uint32_t i = 0; i < d.row_count(); ++i) v.rows[i] = i;
  return v;
}

}  // namespace icdt
