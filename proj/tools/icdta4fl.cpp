#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "icdt/error.hpp"
#include "icdt/federation.hpp"
#include "icdt/preprocess.hpp"
#include "icdt/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace icdt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot write " + path);
  out << content;
}

json schema_to_json(const Schema& schema) {
  json features = json::array();
  for (const auto& f : schema.features) {
    json jf;
    jf["name"] = f.name;
    jf["kind"] = f.kind == FeatureKind::Categorical ? "categorical" : "numeric";
    if (f.kind == FeatureKind::Categorical) jf["symbols"] = f.symbols;
    features.push_back(std::move(jf));
  }
  return json{{"features", std::move(features)}, {"classes", schema.class_names}};
}

SchemaPtr schema_from_json(const json& doc) {
  auto schema = std::make_shared<Schema>();
  for (const auto& jf : doc.at("features")) {
    Feature f;
    f.name = jf.at("name").get<std::string>();
    f.kind = jf.at("kind").get<std::string>() == "numeric" ? FeatureKind::Numeric
                                                           : FeatureKind::Categorical;
    if (jf.contains("symbols")) f.symbols = jf.at("symbols").get<std::vector<std::string>>();
    schema->features.push_back(std::move(f));
  }
  schema->class_names = doc.at("classes").get<std::vector<std::string>>();
  validate_schema(*schema);
  return schema;
}

// ------------------------------------------------------------------ run

int cmd_run(const std::string& config_path, const std::string& out_path,
            const std::string& model_path, bool no_timing) {
  ExperimentConfig config = parse_config(read_file(config_path));

  // manifest paths resolve relative to the config file
  fs::path dataset(config.dataset);
  if (dataset.is_relative()) {
    fs::path next_to_config = fs::path(config_path).parent_path() / dataset;
    if (fs::exists(next_to_config)) config.dataset = next_to_config.string();
  }

  ExperimentReport report = run_experiment(config);
  if (!out_path.empty()) write_file(out_path, report_json(report, !no_timing));
  std::cout << report_table(report);

  if (!model_path.empty() && report.global.ok) {
    // re-run the first fold's round to materialize the model for inspection;
    // the report itself stays fold-averaged
    DatasetManifest manifest = load_manifest(config.dataset);
    Dataset raw = load_dataset(manifest);
    ExperimentConfig one = config;
    json doc;
    Dataset data = config.tree_kind == TreeKind::Id3 ? discretize_numeric(raw, config.bins)
                                                     : encode_ordinal(raw);
    TrainParams params = config.tree_kind == TreeKind::Id3 ? default_id3_params(data.schema())
                                                           : default_cart_params();
    if (config.max_depth) params.max_depth = *config.max_depth;
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
    for (std::size_t i = 0; i < ctx.client_rows.size(); ++i) {
      int k = std::min<int>(config.folds, static_cast<int>(ctx.client_rows[i].size()));
      ctx.folds.push_back(kfold(ctx.client_rows[i], data, k, mix_seed(config.seed, i)));
    }
    RoundReport round = run_round(ctx, 0);
    for (const auto& entry : round.transcript) {
      if (const auto* global = std::get_if<GlobalModel>(&entry.message)) {
        doc["schema"] = schema_to_json(data.schema());
        doc["tree"] = json::parse(global->tree);
        doc["rules"] = json::parse(global->rules);
        break;
      }
    }
    write_file(model_path, doc.dump(2) + "\n");
    (void)one;
  }

  bool all_ok = report.baseline.ok && report.global.ok &&
                (!(report.config.include_fedid3 && report.config.tree_kind == TreeKind::Id3) ||
                 report.fedid3.ok);
  return all_ok ? 0 : 1;
}

// ------------------------------------------------------------------ sweep

struct SweepJob {
  ExperimentConfig config;
  std::string label;
};

int cmd_sweep(const std::string& config_path, const std::string& out_dir, int jobs) {
  json doc;
  try {
    doc = json::parse(read_file(config_path));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  auto as_list = [&](const char* key, json fallback) {
    if (!doc.contains(key)) return json::array({fallback});
    if (doc[key].is_array()) return doc[key];
    return json::array({doc[key]});
  };
  json client_list = as_list("clients", 2);
  json dist_list = as_list("distribution", "iid");
  json kind_list = as_list("tree_kind", "id3");

  std::vector<SweepJob> pending;
  for (const auto& kind : kind_list) {
    for (const auto& dist : dist_list) {
      for (const auto& clients : client_list) {
        json single = doc;
        single["clients"] = clients;
        single["distribution"] = dist;
        single["tree_kind"] = kind;
        SweepJob job;
        job.config = parse_config(single.dump());
        fs::path dataset(job.config.dataset);
        if (dataset.is_relative()) {
          fs::path next_to_config = fs::path(config_path).parent_path() / dataset;
          if (fs::exists(next_to_config)) job.config.dataset = next_to_config.string();
        }
        std::ostringstream label;
        label << kind.get<std::string>() << "_" << dist.get<std::string>() << "_c"
              << clients.get<int>();
        job.label = label.str();
        pending.push_back(std::move(job));
      }
    }
  }

  fs::create_directories(out_dir);
  std::vector<ExperimentReport> reports(pending.size());
  std::vector<std::string> errors(pending.size());
  std::atomic<std::size_t> cursor{0};
  std::mutex io;

  auto worker = [&] {
    while (true) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= pending.size()) return;
      try {
        reports[i] = run_experiment(pending[i].config);
        write_file((fs::path(out_dir) / ("run_" + pending[i].label + ".json")).string(),
                   report_json(reports[i]));
        std::lock_guard<std::mutex> lock(io);
        std::cout << pending[i].label << ":\n" << report_table(reports[i]) << "\n";
      } catch (const std::exception& e) {
        errors[i] = e.what();
        std::lock_guard<std::mutex> lock(io);
        std::cerr << pending[i].label << " failed: " << e.what() << "\n";
      }
    }
  };
  int thread_count = std::max(1, std::min<int>(jobs, static_cast<int>(pending.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  // merged summary, one row per (dataset, clients, distribution, variant)
  std::ostringstream csv;
  csv << "dataset,clients,distribution,tree_kind,variant,accuracy,macro_f1,status\n";
  bool any_failed = false;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    const ExperimentConfig& c = pending[i].config;
    auto row = [&](const std::string& variant, const VariantResult& v) {
      csv << reports[i].dataset_name << ',' << c.clients << ','
          << (c.distribution == Distribution::IID ? "iid" : "noniid") << ','
          << (c.tree_kind == TreeKind::Id3 ? "id3" : "cart") << ',' << variant << ',';
      if (v.ok)
        csv << v.metrics.accuracy << ',' << v.metrics.macro_f1 << ",ok\n";
      else
        csv << ",,failed\n";
    };
    if (!errors[i].empty()) {
      csv << pending[i].label << ",,,," << "all," << ",,failed\n";
      any_failed = true;
      continue;
    }
    row("baseline", reports[i].baseline);
    row("icdta4fl", reports[i].global);
    if (c.include_fedid3 && c.tree_kind == TreeKind::Id3) row("federated_id3", reports[i].fedid3);
    any_failed |= !reports[i].baseline.ok || !reports[i].global.ok;
  }
  write_file((fs::path(out_dir) / "summary.csv").string(), csv.str());
  return any_failed ? 1 : 0;
}

// ------------------------------------------------------------------ explain

int cmd_explain(const std::string& model_path, const std::string& instance_path) {
  json doc;
  try {
    doc = json::parse(read_file(model_path));
  } catch (const json::exception& e) {
    throw LoadError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.contains("schema") || !doc.contains("tree"))
    throw LoadError("model file needs schema and tree");
  SchemaPtr schema = schema_from_json(doc.at("schema"));
  DecisionTree tree = deserialize(doc.at("tree").dump(), schema);

  // instance CSV: header naming the schema's features (class column optional)
  std::ifstream in(instance_path);
  if (!in) throw LoadError("cannot open " + instance_path);
  std::string header;
  if (!std::getline(in, header)) throw LoadError(instance_path + ": empty file");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  auto columns = split(header);
  std::vector<int> feature_of(columns.size(), -1);
  for (std::size_t c = 0; c < columns.size(); ++c)
    for (std::size_t f = 0; f < schema->feature_count(); ++f)
      if (schema->features[f].name == columns[c]) feature_of[c] = static_cast<int>(f);

  for (std::size_t f = 0; f < schema->feature_count(); ++f) {
    bool found = false;
    for (int mapped : feature_of) found |= mapped == static_cast<int>(f);
    if (!found)
      throw LoadError(instance_path + ": missing feature column \"" +
                      schema->features[f].name + "\"");
  }

  std::string line;
  int printed = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != columns.size())
      throw LoadError(instance_path + ": row arity differs from the header");
    std::vector<double> values(schema->feature_count(), 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (feature_of[c] < 0) continue;  // class column or extras are ignored
      const Feature& feat = schema->features[static_cast<std::size_t>(feature_of[c])];
      if (feat.kind == FeatureKind::Categorical) {
        auto it = std::find(feat.symbols.begin(), feat.symbols.end(), cells[c]);
        if (it == feat.symbols.end())
          throw LoadError(instance_path + ": symbol \"" + cells[c] +
                          "\" is not in the model's vocabulary for " + feat.name);
        values[static_cast<std::size_t>(feature_of[c])] =
            static_cast<double>(it - feat.symbols.begin());
      } else {
        try {
          values[static_cast<std::size_t>(feature_of[c])] = std::stod(cells[c]);
        } catch (const std::exception&) {
          throw LoadError(instance_path + ": \"" + cells[c] + "\" is not numeric for " +
                          feat.name);
        }
      }
    }
    Dataset one(schema, values, {0});
    std::uint32_t cls = predict(tree, one, 0);
    auto path = explain(tree, one, 0);
    std::ostringstream conjunction;
    conjunction << '{';
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i) conjunction << ", ";
      conjunction << to_string(path[i], *schema);
    }
    conjunction << '}';
    std::cout << "class " << schema->class_names[cls] << "  " << conjunction.str() << "\n";
    ++printed;
  }
  if (printed == 0) throw LoadError(instance_path + ": no instance rows");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated decision-tree aggregation experiments"};
  app.require_subcommand(1);

  std::string config_path, out_path, model_path, instance_path, out_dir;
  bool no_timing = false;
  int jobs = 1;

  auto* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out", out_path, "Report JSON output path");
  run->add_option("--save-model", model_path, "Write the fold-0 global model");
  run->add_flag("--no-timing", no_timing, "Omit wall times from the report");

  auto* sweep = app.add_subcommand("sweep", "Cross-product over clients/distribution/kind");
  sweep->add_option("--config", config_path, "Sweep config JSON (fields may be lists)")
      ->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Concurrent runs");

  auto* explain_cmd = app.add_subcommand("explain", "Explain instances with a saved model");
  explain_cmd->add_option("--model", model_path, "Model JSON from run --save-model")->required();
  explain_cmd->add_option("--instance", instance_path, "One-or-more-row instance CSV")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, out_path, model_path, no_timing);
    if (sweep->parsed()) return cmd_sweep(config_path, out_dir, jobs);
    if (explain_cmd->parsed()) return cmd_explain(model_path, instance_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
