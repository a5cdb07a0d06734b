#include "icdt/federation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "icdt/error.hpp"
#include "icdt/fedid3.hpp"
#include "icdt/preprocess.hpp"
#include "icdt/rng.hpp"

namespace icdt {

using nlohmann::json;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json metrics_json(const Metrics& m) {
  return json{{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"support", m.support}};
}

}  // namespace

std::string payload_json(const Message& message) {
  json doc;
  if (const auto* upload = std::get_if<TreeUpload>(&message)) {
    doc["type"] = "tree_upload";
    doc["tree"] = json::parse(upload->tree);
  } else if (const auto* broadcast = std::get_if<TreeBroadcast>(&message)) {
    doc["type"] = "tree_broadcast";
    json trees = json::array();
    for (const auto& t : broadcast->trees) trees.push_back(json::parse(t));
    doc["trees"] = std::move(trees);
  } else if (const auto* eval = std::get_if<EvalReport>(&message)) {
    doc["type"] = "eval_report";
    json list = json::array();
    for (const auto& m : eval->per_tree) list.push_back(metrics_json(m));
    doc["per_tree"] = std::move(list);
  } else if (const auto* global = std::get_if<GlobalModel>(&message)) {
    doc["type"] = "global_model";
    doc["tree"] = json::parse(global->tree);
    doc["rules"] = json::parse(global->rules);
  }
  return doc.dump();
}

// ---------------------------------------------------------------- config

namespace {

FilterPolicy parse_filter(const json& doc) {
  FilterPolicy policy;
  if (!doc.is_object()) throw ConfigError("filter must be an object");
  std::string stat = doc.value("statistic", "mean");
  if (stat == "mean") {
    policy.statistic = FilterStatistic::Mean;
  } else if (stat == "median") {
    policy.statistic = FilterStatistic::Median;
  } else if (stat == "percentile") {
    policy.statistic = FilterStatistic::Percentile;
    policy.percentile = doc.value("p", 50.0);
    if (policy.percentile < 0.0 || policy.percentile > 100.0)
      throw ConfigError("filter.p must lie in [0, 100]");
  } else {
    throw ConfigError("filter.statistic must be mean, median or percentile");
  }
  std::string metric = doc.value("metric", "macro_f1");
  if (metric == "accuracy")
    policy.metric = FilterMetric::Accuracy;
  else if (metric == "macro_f1")
    policy.metric = FilterMetric::MacroF1;
  else
    throw ConfigError("filter.metric must be accuracy or macro_f1");
  return policy;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig config;
  if (!doc.contains("dataset")) throw ConfigError("config needs a dataset manifest path");
  config.dataset = doc["dataset"].get<std::string>();

  std::string kind = doc.value("tree_kind", "id3");
  if (kind == "id3")
    config.tree_kind = TreeKind::Id3;
  else if (kind == "cart")
    config.tree_kind = TreeKind::Cart;
  else
    throw ConfigError("tree_kind must be id3 or cart");

  config.clients = doc.value("clients", 2);
  if (config.clients < 1) throw ConfigError("clients must be positive");

  std::string dist = doc.value("distribution", "iid");
  if (dist == "iid")
    config.distribution = Distribution::IID;
  else if (dist == "noniid")
    config.distribution = Distribution::NonIID;
  else
    throw ConfigError("distribution must be iid or noniid");

  if (doc.contains("filter")) config.filter = parse_filter(doc["filter"]);
  config.folds = doc.value("folds", 10);
  if (config.folds < 2) throw ConfigError("folds must be at least 2");
  config.seed = doc.value("seed", std::uint64_t{0});
  config.rule_cap = doc.value("rule_cap", std::size_t{50000});
  if (config.rule_cap < 1) throw ConfigError("rule_cap must be positive");
  config.bins = doc.value("bins", 5);
  if (config.bins < 2) throw ConfigError("bins must be at least 2");
  config.min_instances = doc.value("min_instances", 5);
  if (config.min_instances < 1) throw ConfigError("min_instances must be positive");
  if (doc.contains("max_depth")) {
    config.max_depth = doc["max_depth"].get<int>();
    if (*config.max_depth < 1) throw ConfigError("max_depth must be positive");
  }
  config.include_fedid3 = doc.value("include_fedid3", true);
  return config;
}

std::string config_json(const ExperimentConfig& config) {
  json filter;
  switch (config.filter.statistic) {
    case FilterStatistic::Mean:
      filter["statistic"] = "mean";
      break;
    case FilterStatistic::Median:
      filter["statistic"] = "median";
      break;
    case FilterStatistic::Percentile:
      filter["statistic"] = "percentile";
      filter["p"] = config.filter.percentile;
      break;
  }
  filter["metric"] = config.filter.metric == FilterMetric::Accuracy ? "accuracy" : "macro_f1";

  json doc;
  doc["dataset"] = config.dataset;
  doc["tree_kind"] = config.tree_kind == TreeKind::Id3 ? "id3" : "cart";
  doc["clients"] = config.clients;
  doc["distribution"] = config.distribution == Distribution::IID ? "iid" : "noniid";
  doc["filter"] = std::move(filter);
  doc["folds"] = config.folds;
  doc["seed"] = config.seed;
  doc["rule_cap"] = config.rule_cap;
  doc["bins"] = config.bins;
  doc["min_instances"] = config.min_instances;
  if (config.max_depth) doc["max_depth"] = *config.max_depth;
  doc["include_fedid3"] = config.include_fedid3;
  return doc.dump();
}

// ---------------------------------------------------------------- round

RoundReport run_round(const RoundContext& ctx, int fold) {
  const Dataset& data = *ctx.data;
  std::size_t n = ctx.client_rows.size();
  RoundReport report;
  report.cross_eval = CrossEvalMatrix(n);
  int seq = 0;
  auto log = [&](std::string sender, std::string receiver, Message message) {
    report.transcript.push_back(LoggedMessage{seq++, std::move(sender), std::move(receiver),
                                              std::move(message)});
  };
  auto client_name = [](std::size_t i) { return "client:" + std::to_string(i); };

  // per-client train/test views for this round's fold
  std::vector<View> train(n), test(n);
  for (std::size_t i = 0; i < n; ++i) {
    int local_fold = fold % ctx.folds[i].fold_count;
    train[i] = View{&data, ctx.folds[i].train_of(local_fold)};
    test[i] = View{&data, ctx.folds[i].test_rows[static_cast<std::size_t>(local_fold)]};
  }

  // phase 1: local training, trees go up
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> uploads(n);
  for (std::size_t i = 0; i < n; ++i) {
    DecisionTree local = ctx.kind == TreeKind::Id3 ? train_id3(train[i], ctx.params)
                                                   : train_cart(train[i], ctx.params);
    report.local_test.push_back(evaluate(local, test[i]));
    uploads[i] = serialize(local);
    if (ctx.upload_channel) uploads[i] = ctx.upload_channel(i, std::move(uploads[i]));
    log(client_name(i), "server", TreeUpload{uploads[i]});
  }
  report.timings.train_s = seconds_since(t0);

  // the server validates uploads; undecodable trees drop their client
  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      deserialize(uploads[i], data.schema_ptr());
      valid.push_back(i);
    } catch (const LoadError&) {
      report.dropped_clients.push_back(i);
    }
  }
  if (valid.empty()) throw TrainError("every client upload was undecodable");

  // phase 2: broadcast every valid tree
  t0 = std::chrono::steady_clock::now();
  std::vector<std::string> pool;
  for (auto i : valid) pool.push_back(uploads[i]);
  for (std::size_t i = 0; i < n; ++i) log("server", client_name(i), TreeBroadcast{pool});

  // phase 3: cross-evaluation on each client's training share
  std::vector<DecisionTree> pool_trees;
  for (const auto& bytes : pool) pool_trees.push_back(deserialize(bytes, data.schema_ptr()));
  for (std::size_t k = 0; k < n; ++k) {
    EvalReport eval;
    for (std::size_t j = 0; j < pool_trees.size(); ++j) {
      Metrics m = evaluate(pool_trees[j], train[k]);
      report.cross_eval.at(k, valid[j]) = m;
      eval.per_tree.push_back(m);
    }
    log(client_name(k), "server", eval);
  }
  report.timings.cross_eval_s = seconds_since(t0);

  // phase 4: filter, extract, merge, rebuild
  t0 = std::chrono::steady_clock::now();
  std::vector<double> pool_scores(pool_trees.size(), 0.0);
  if (valid.size() == n) {
    pool_scores = score_trees(report.cross_eval, ctx.filter);
  } else {
    // dropped uploads leave the matrix rectangular: every client still scores
    for (std::size_t j = 0; j < pool_trees.size(); ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const Metrics& m = report.cross_eval.at(k, valid[j]);
        total += ctx.filter.metric == FilterMetric::Accuracy ? m.accuracy : m.macro_f1;
      }
      pool_scores[j] = total / static_cast<double>(n);
    }
  }
  report.scores.assign(n, 0.0);
  for (std::size_t j = 0; j < pool_trees.size(); ++j) report.scores[valid[j]] = pool_scores[j];

  std::vector<std::size_t> pool_survivors = apply_filter(pool_scores, ctx.filter);
  for (auto j : pool_survivors) report.survivors.push_back(valid[j]);

  std::vector<std::pair<double, std::size_t>> order;
  for (auto j : pool_survivors) order.emplace_back(-pool_scores[j], j);
  std::sort(order.begin(), order.end());

  std::vector<RuleSet> selected;
  for (const auto& [neg_score, j] : order)
    selected.push_back(extract_rules(pool_trees[j], static_cast<int>(valid[j])));

  FoldMergeResult merge = fold_merge(selected, ctx.rule_cap);
  report.merged_rule_count = merge.merged.rules.size();
  report.truncations = merge.truncations;

  DecisionTree global = build_global_tree(merge.merged, ctx.params);
  std::string global_bytes = serialize(global);
  std::string rules_bytes = serialize_rules(merge.merged);
  for (std::size_t i = 0; i < n; ++i)
    log("server", client_name(i), GlobalModel{global_bytes, rules_bytes});
  report.timings.aggregate_s = seconds_since(t0);

  // phase 5: every client scores the global tree on its test fold
  t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < n; ++i) report.global_test.push_back(evaluate(global, test[i]));
  report.timings.evaluate_s = seconds_since(t0);
  return report;
}

// ---------------------------------------------------------------- experiment

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ExperimentReport run_experiment_on(const ExperimentConfig& config, const Dataset& raw,
                                   const std::string& dataset_name) {
  ExperimentReport report;
  report.config = config;
  report.dataset_name = dataset_name;

  // per-kind preprocessing on the full dataset, before partitioning
  Dataset data = config.tree_kind == TreeKind::Id3 ? discretize_numeric(raw, config.bins)
                                                   : encode_ordinal(raw);
  report.rows = data.row_count();
  report.features = data.feature_count();
  report.classes = data.schema().class_count();

  TrainParams params = config.tree_kind == TreeKind::Id3 ? default_id3_params(data.schema())
                                                         : default_cart_params();
  if (config.max_depth) params.max_depth = *config.max_depth;
  report.effective_max_depth = params.max_depth;

  RoundContext ctx;
  ctx.data = &data;
  ctx.params = params;
  ctx.filter = config.filter;
  ctx.rule_cap = config.rule_cap;
  ctx.kind = config.tree_kind;

  if (config.clients == 1) {
    ctx.client_rows.push_back(full_view(data).rows);
  } else {
    PartitionPlan plan;
    plan.mode = config.distribution;
    plan.client_count = config.clients;
    plan.seed = config.seed;
    plan.min_instances = config.min_instances;
    ctx.client_rows = partition(data, plan);
  }

  std::size_t n = ctx.client_rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    int k = std::min<int>(config.folds, static_cast<int>(ctx.client_rows[i].size()));
    report.fold_reductions.push_back(k);
    ctx.folds.push_back(kfold(ctx.client_rows[i], data, k, mix_seed(config.seed, i)));
  }

  report.baseline.per_client_per_fold.assign(n, {});
  report.global.per_client_per_fold.assign(n, {});

  std::vector<double> survivor_counts, merged_counts;
  for (int fold = 0; fold < config.folds; ++fold) {
    try {
      RoundReport round = run_round(ctx, fold);
      for (std::size_t i = 0; i < n; ++i) {
        report.baseline.per_client_per_fold[i].push_back(round.local_test[i]);
        report.global.per_client_per_fold[i].push_back(round.global_test[i]);
      }
      survivor_counts.push_back(static_cast<double>(round.survivors.size()));
      merged_counts.push_back(static_cast<double>(round.merged_rule_count));
      if (!round.truncations.empty()) ++report.truncated_folds;
      report.timings.train_s += round.timings.train_s;
      report.timings.cross_eval_s += round.timings.cross_eval_s;
      report.timings.aggregate_s += round.timings.aggregate_s;
      report.timings.evaluate_s += round.timings.evaluate_s;
    } catch (const Error& e) {
      report.fold_failures.push_back("fold " + std::to_string(fold) + ": " + e.what());
    }
  }

  if (!report.baseline.per_client_per_fold.empty() &&
      !report.baseline.per_client_per_fold.front().empty()) {
    report.baseline.metrics = two_level_mean(report.baseline.per_client_per_fold);
    report.baseline.ok = true;
    report.global.metrics = two_level_mean(report.global.per_client_per_fold);
    report.global.ok = true;
  } else {
    report.baseline.error = "every fold failed";
    report.global.error = report.fold_failures.empty() ? "every fold failed"
                                                       : report.fold_failures.front();
  }
  report.survivors_mean = mean_of(survivor_counts);
  report.merged_rules_mean = mean_of(merged_counts);

  // the count-aggregation comparator shares the folds and the preprocessing
  if (config.include_fedid3 && config.tree_kind == TreeKind::Id3) {
    report.fedid3.per_client_per_fold.assign(n, {});
    try {
      for (int fold = 0; fold < config.folds; ++fold) {
        std::vector<CountClient> clients;
        for (std::size_t i = 0; i < n; ++i) {
          int local_fold = fold % ctx.folds[i].fold_count;
          clients.push_back(CountClient{View{&data, ctx.folds[i].train_of(local_fold)}});
        }
        DecisionTree tree = fedid3_build(clients, data.schema_ptr(), params.max_depth);
        for (std::size_t i = 0; i < n; ++i) {
          int local_fold = fold % ctx.folds[i].fold_count;
          View test{&data, ctx.folds[i].test_rows[static_cast<std::size_t>(local_fold)]};
          report.fedid3.per_client_per_fold[i].push_back(evaluate(tree, test));
        }
      }
      report.fedid3.metrics = two_level_mean(report.fedid3.per_client_per_fold);
      report.fedid3.ok = true;
    } catch (const Error& e) {
      report.fedid3.error = e.what();
    }
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  DatasetManifest manifest = load_manifest(config.dataset);
  Dataset raw = load_dataset(manifest);
  std::string name = config.dataset;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.find('.'); dot != std::string::npos) name = name.substr(0, dot);
  return run_experiment_on(config, raw, name);
}

// ---------------------------------------------------------------- reports

namespace {

json variant_json(const VariantResult& v) {
  json doc;
  doc["status"] = v.ok ? "ok" : "failed";
  if (v.ok) {
    doc["accuracy"] = v.metrics.accuracy;
    doc["macro_f1"] = v.metrics.macro_f1;
  } else {
    doc["error"] = v.error;
  }
  return doc;
}

}  // namespace

std::string report_json(const ExperimentReport& report, bool include_timing) {
  json doc;
  doc["config"] = json::parse(config_json(report.config));
  doc["dataset"] = {{"name", report.dataset_name},
                    {"rows", report.rows},
                    {"features", report.features},
                    {"classes", report.classes}};
  doc["effective_max_depth"] = report.effective_max_depth;
  doc["fold_counts"] = report.fold_reductions;
  doc["variants"]["baseline"] = variant_json(report.baseline);
  doc["variants"]["icdta4fl"] = variant_json(report.global);
  if (report.config.include_fedid3 && report.config.tree_kind == TreeKind::Id3)
    doc["variants"]["federated_id3"] = variant_json(report.fedid3);
  doc["survivors_mean"] = report.survivors_mean;
  doc["merged_rules_mean"] = report.merged_rules_mean;
  doc["truncated_folds"] = report.truncated_folds;
  doc["fold_failures"] = report.fold_failures;
  if (include_timing) {
    doc["timing"] = {{"train_s", report.timings.train_s},
                     {"cross_eval_s", report.timings.cross_eval_s},
                     {"aggregate_s", report.timings.aggregate_s},
                     {"evaluate_s", report.timings.evaluate_s}};
  }
  return doc.dump(2) + "\n";
}

std::string report_table(const ExperimentReport& report) {
  std::ostringstream out;
  char line[128];
  out << report.dataset_name << "  clients=" << report.config.clients << "  "
      << (report.config.distribution == Distribution::IID ? "iid" : "noniid") << "  "
      << (report.config.tree_kind == TreeKind::Id3 ? "id3" : "cart") << "\n";
  out << "variant            Acc      F1\n";
  auto row = [&](const char* name, const VariantResult& v) {
    if (v.ok) {
      std::snprintf(line, sizeof line, "%-16s %6.2f  %6.2f\n", name, 100.0 * v.metrics.accuracy,
                    100.0 * v.metrics.macro_f1);
      out << line;
    } else {
      std::snprintf(line, sizeof line, "%-16s failed: %s\n", name, v.error.c_str());
      out << line;
    }
  };
  row("baseline", report.baseline);
  row("icdta4fl", report.global);
  if (report.config.include_fedid3 && report.config.tree_kind == TreeKind::Id3)
    row("federated_id3", report.fedid3);
  return out.str();
}

}  // namespace icdt
