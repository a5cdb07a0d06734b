#pragma once

#include <cstdint>
#include <vector>

namespace icdt {

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t support = 0;
};

// Accuracy and macro-F1 over all K classes. Per-class F1 is 0 whenever
// precision + recall is 0, including classes absent from both vectors.
Metrics compute_metrics(const std::vector<std::uint32_t>& y_true,
                        const std::vector<std::uint32_t>& y_pred, std::size_t class_count);

// Mean over folds within each client, then unweighted mean over clients.
Metrics two_level_mean(const std::vector<std::vector<Metrics>>& per_client_per_fold);

}  // namespace icdt
