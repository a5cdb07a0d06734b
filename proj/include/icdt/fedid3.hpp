#pragma once

#include <cstdint>
#include <vector>

#include "icdt/condition.hpp"
#include "icdt/dataset.hpp"
#include "icdt/tree.hpp"

namespace icdt {

// Path constraints (distinct categorical features) plus the feature whose
// per-symbol class counts are requested.
struct CountQuery {
  std::vector<Condition> constraints;
  int target_feature = -1;
};

// counts[symbol][class] over the client's rows satisfying the constraints.
struct CountReply {
  std::vector<std::vector<double>> counts;
};

// A participant answering count queries over its local rows. No row
// identifiers ever cross this interface.
struct CountClient {
  View view;
};

CountReply client_counts(const CountClient& client, const CountQuery& query);

struct FedId3Stats {
  std::size_t query_batches = 0;  // one batch per tree level
  std::size_t queries = 0;
};

// Single ID3 grown from the elementwise sum of all clients' count replies,
// batched level by level. Tie-breaking mirrors train_id3 exactly, so the
// result equals train_id3 on the pooled rows.
DecisionTree fedid3_build(const std::vector<CountClient>& clients, SchemaPtr schema,
                          int max_depth, FedId3Stats* stats = nullptr);

}  // namespace icdt
