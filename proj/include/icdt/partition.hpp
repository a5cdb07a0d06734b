#pragma once

#include <cstdint>
#include <vector>

#include "icdt/dataset.hpp"

namespace icdt {

enum class Distribution { IID, NonIID };

struct PartitionPlan {
  Distribution mode = Distribution::IID;
  int client_count = 2;
  std::uint64_t seed = 0;
  int min_instances = 5;  // non-IID floor
};

// Splits the dataset's row indices into disjoint client shares covering all
// rows. IID: share sizes within 1 of |D|/n and per-class counts within 1 of
// proportional. NonIID: Dirichlet(1/2) share sizes over class-sorted rows,
// repaired so every client keeps at least min_instances rows.
std::vector<std::vector<std::uint32_t>> partition(const Dataset& d, const PartitionPlan& plan);

struct FoldSplit {
  int fold_count = 0;
  // test_rows[f] holds fold f's test indices; the remaining indices train.
  std::vector<std::vector<std::uint32_t>> test_rows;

  std::vector<std::uint32_t> train_of(int fold) const;
};

// Stratified k-fold split of one client's rows. Folds partition the rows and
// per-fold class histograms stay within 1 of the proportional share. Throws
// FoldError when |indices| < k.
FoldSplit kfold(const std::vector<std::uint32_t>& indices, const Dataset& d, int k,
                std::uint64_t seed);

}  // namespace icdt
