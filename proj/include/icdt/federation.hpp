#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "icdt/aggregation.hpp"
#include "icdt/csv.hpp"
#include "icdt/dataset.hpp"
#include "icdt/metrics.hpp"
#include "icdt/partition.hpp"
#include "icdt/rules.hpp"
#include "icdt/tree.hpp"

namespace icdt {

// The four client-server exchanges. Payloads are exactly the serialized forms
// defined by the tree/rules modules; no variant can carry dataset rows.
struct TreeUpload {
  std::string tree;
};
struct TreeBroadcast {
  std::vector<std::string> trees;
};
struct EvalReport {
  std::vector<Metrics> per_tree;
};
struct GlobalModel {
  std::string tree;
  std::string rules;
};

using Message = std::variant<TreeUpload, TreeBroadcast, EvalReport, GlobalModel>;

struct LoggedMessage {
  int seq = 0;
  std::string sender;    // "client:3" or "server"
  std::string receiver;
  Message message;
};

using Transcript = std::vector<LoggedMessage>;

// JSON rendering of a message payload, used by the protocol audit.
std::string payload_json(const Message& message);

// Declarative experiment description (External Interfaces):
//   {"dataset": manifest path, "tree_kind": "id3"|"cart", "clients": n,
//    "distribution": "iid"|"noniid", "filter": {"statistic", "metric"},
//    "folds": k, "seed": s, "rule_cap": c, "bins": b}
struct ExperimentConfig {
  std::string dataset;  // manifest path
  TreeKind tree_kind = TreeKind::Id3;
  int clients = 2;
  Distribution distribution = Distribution::IID;
  FilterPolicy filter;
  int folds = 10;
  std::uint64_t seed = 0;
  std::size_t rule_cap = 50000;
  int bins = 5;
  int min_instances = 5;
  std::optional<int> max_depth;    // overrides the per-kind default
  bool include_fedid3 = true;      // comparator; ID3 runs only
};

ExperimentConfig parse_config(const std::string& json_text);
std::string config_json(const ExperimentConfig& config);

// Everything a single round needs: the preprocessed dataset, the client
// shares, and per-client fold splits (k reduced to the share size for tiny
// non-IID clients).
struct RoundContext {
  const Dataset* data = nullptr;
  std::vector<std::vector<std::uint32_t>> client_rows;
  std::vector<FoldSplit> folds;
  TrainParams params;
  FilterPolicy filter;
  std::size_t rule_cap = 50000;
  TreeKind kind = TreeKind::Id3;
  // Transport seam for the upload leg; a lossy link may corrupt payloads, and
  // an undecodable tree drops its client instead of failing the round.
  std::function<std::string(std::size_t, std::string)> upload_channel;
};

struct PhaseTimings {
  double train_s = 0.0;
  double cross_eval_s = 0.0;
  double aggregate_s = 0.0;
  double evaluate_s = 0.0;
};

struct RoundReport {
  std::vector<Metrics> local_test;   // client's own tree on its test fold
  CrossEvalMatrix cross_eval;        // over fold-train shares
  std::vector<double> scores;
  std::vector<std::size_t> survivors;
  std::size_t merged_rule_count = 0;
  std::vector<TruncationEvent> truncations;
  std::vector<std::size_t> dropped_clients;  // undecodable uploads
  std::vector<Metrics> global_test;  // global tree on each client's test fold
  Transcript transcript;
  PhaseTimings timings;
};

// One full pass of the five-phase protocol on a given fold: train, upload,
// broadcast, cross-evaluate, report, filter+extract+merge+build, deliver,
// evaluate. Throws DegenerateMergeError when aggregation empties out.
RoundReport run_round(const RoundContext& ctx, int fold);

struct VariantResult {
  bool ok = false;
  std::string error;
  Metrics metrics;
  std::vector<std::vector<Metrics>> per_client_per_fold;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::string dataset_name;
  std::size_t rows = 0;
  std::size_t features = 0;
  std::size_t classes = 0;
  int effective_max_depth = 0;
  std::vector<int> fold_reductions;  // per client, reduced fold count (or k)
  VariantResult baseline;
  VariantResult global;   // ICDTA4FL
  VariantResult fedid3;   // comparator, when requested
  std::vector<std::string> fold_failures;
  double survivors_mean = 0.0;
  double merged_rules_mean = 0.0;
  std::size_t truncated_folds = 0;
  PhaseTimings timings;  // summed over folds
};

// Runs run_round per fold and averages fold-first then client-wise, matching
// the two-level cross-validation scheme. An experiment succeeds when at least
// one fold does; per-fold failures are listed.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Variant of run_experiment for a dataset already in memory (tests).
ExperimentReport run_experiment_on(const ExperimentConfig& config, const Dataset& raw,
                                   const std::string& dataset_name);

std::string report_json(const ExperimentReport& report, bool include_timing = true);
std::string report_table(const ExperimentReport& report);

}  // namespace icdt
