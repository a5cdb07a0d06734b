#pragma once

#include "icdt/dataset.hpp"

namespace icdt {

// Replaces every numeric feature by a categorical one whose symbols are
// quantile-bin intervals computed on the full dataset (before partitioning).
// A feature with fewer distinct values than `bins` uses the distinct count.
// Binning is monotone: value(a) <= value(b) implies bin(a) <= bin(b).
Dataset discretize_numeric(const Dataset& d, int bins);

// Replaces every categorical feature by a numeric one carrying the interned
// symbol index. Applied before CART training.
Dataset encode_ordinal(const Dataset& d);

}  // namespace icdt
