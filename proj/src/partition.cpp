#include "icdt/partition.hpp"

#include <algorithm>
#include <numeric>

#include "icdt/error.hpp"
#include "icdt/rng.hpp"

namespace icdt {

namespace {

// Per-class shuffled index lists.
std::vector<std::vector<std::uint32_t>> by_class(const std::vector<std::uint32_t>& rows,
                                                 const Dataset& d, Rng& rng) {
  std::vector<std::vector<std::uint32_t>> groups(d.schema().class_count());
  for (auto r : rows) groups[d.label(r)].push_back(r);
  for (auto& g : groups) rng.shuffle(g);
  return groups;
}

// Deals each class around the circle of `parts`, rotating the start so the
// per-class remainders spread evenly and total sizes stay within one row.
std::vector<std::vector<std::uint32_t>> deal_stratified(
    const std::vector<std::vector<std::uint32_t>>& groups, std::size_t parts) {
  std::vector<std::vector<std::uint32_t>> shares(parts);
  std::size_t rotation = 0;
  for (const auto& g : groups) {
    std::size_t base = g.size() / parts;
    std::size_t rem = g.size() % parts;
    std::size_t pos = 0;
    for (std::size_t p = 0; p < parts; ++p) {
      std::size_t take = base;
      std::size_t offset = (p + parts - rotation) % parts;
      if (offset < rem) ++take;
      for (std::size_t i = 0; i < take; ++i) shares[p].push_back(g[pos++]);
    }
    rotation = (rotation + rem) % parts;
  }
  return shares;
}

std::vector<std::vector<std::uint32_t>> partition_iid(const Dataset& d, const PartitionPlan& plan) {
  Rng rng(mix_seed(plan.seed, 0x11D));
  auto groups = by_class(full_view(d).rows, d, rng);
  return deal_stratified(groups, static_cast<std::size_t>(plan.client_count));
}

std::vector<std::vector<std::uint32_t>> partition_noniid(const Dataset& d,
                                                         const PartitionPlan& plan) {
  std::size_t n = static_cast<std::size_t>(plan.client_count);
  std::size_t rows = d.row_count();
  std::size_t floor_total = n * static_cast<std::size_t>(plan.min_instances);
  if (floor_total > rows)
    throw ConfigError("non-IID partition infeasible: " + std::to_string(n) + " clients x " +
                      std::to_string(plan.min_instances) + " min instances > " +
                      std::to_string(rows) + " rows");

  Rng rng(mix_seed(plan.seed, 0x901D));

  // class-sorted order, shuffled within class, class blocks shuffled too
  auto groups = by_class(full_view(d).rows, d, rng);
  std::vector<std::size_t> class_order(groups.size());
  std::iota(class_order.begin(), class_order.end(), 0);
  rng.shuffle(class_order);
  std::vector<std::uint32_t> ordered;
  ordered.reserve(rows);
  for (auto c : class_order)
    for (auto r : groups[c]) ordered.push_back(r);

  // Dirichlet(1/2) share sizes, largest-remainder rounding to the exact total
  auto weights = dirichlet_half(n, rng);
  std::vector<std::size_t> sizes(n);
  std::vector<std::pair<double, std::size_t>> frac(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double exact = weights[i] * static_cast<double>(rows);
    sizes[i] = static_cast<std::size_t>(exact);
    frac[i] = {exact - static_cast<double>(sizes[i]), i};
    assigned += sizes[i];
  }
  std::sort(frac.begin(), frac.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 0; assigned < rows; ++i, ++assigned) ++sizes[frac[i % n].second];

  std::vector<std::vector<std::uint32_t>> shares(n);
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < sizes[i] && pos < rows; ++j) shares[i].push_back(ordered[pos++]);
  }
  while (pos < rows) shares[n - 1].push_back(ordered[pos++]);

  // repair the floor by stealing from the currently largest share
  std::size_t min_rows = static_cast<std::size_t>(plan.min_instances);
  for (std::size_t i = 0; i < n; ++i) {
    while (shares[i].size() < min_rows) {
      std::size_t largest = 0;
      for (std::size_t j = 1; j < n; ++j)
        if (shares[j].size() > shares[largest].size()) largest = j;
      if (largest == i || shares[largest].size() <= min_rows)
        throw ConfigError("non-IID repair failed to honor the minimum share size");
      shares[i].push_back(shares[largest].back());
      shares[largest].pop_back();
    }
  }
  return shares;
}

}  // namespace

std::vector<std::vector<std::uint32_t>> partition(const Dataset& d, const PartitionPlan& plan) {
  if (plan.client_count < 2) throw ConfigError("partition needs at least 2 clients");
  if (static_cast<std::size_t>(plan.client_count) > d.row_count())
    throw ConfigError("more clients than rows");
  return plan.mode == Distribution::IID ? partition_iid(d, plan) : partition_noniid(d, plan);
}

std::vector<std::uint32_t> FoldSplit::train_of(int fold) const {
  std::vector<std::uint32_t> train;
  for (int f = 0; f < fold_count; ++f) {
    if (f == fold) continue;
    train.insert(train.end(), test_rows[f].begin(), test_rows[f].end());
  }
  return train;
}

FoldSplit kfold(const std::vector<std::uint32_t>& indices, const Dataset& d, int k,
                std::uint64_t seed) {
  if (k < 1) throw FoldError("fold count must be positive");
  if (indices.size() < static_cast<std::size_t>(k))
    throw FoldError("cannot split " + std::to_string(indices.size()) + " rows into " +
                    std::to_string(k) + " folds");
  Rng rng(mix_seed(seed, 0xF01D));
  auto groups = by_class(indices, d, rng);
  FoldSplit split;
  split.fold_count = k;
  split.test_rows = deal_stratified(groups, static_cast<std::size_t>(k));
  return split;
}

}  // namespace icdt
