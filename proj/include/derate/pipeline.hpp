#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "derate/adjacency.hpp"
#include "derate/campaign.hpp"
#include "derate/error.hpp"
#include "derate/gcn.hpp"
#include "derate/gml.hpp"
#include "derate/graph.hpp"
#include "derate/netlist_parser.hpp"
#include "derate/node2vec.hpp"
#include "derate/rng.hpp"
#include "derate/simulate.hpp"
#include "derate/skipgram.hpp"
#include "derate/stats.hpp"

namespace derate {

struct CampaignSettings {
  int n_cycles = 1024;
  int injections_per_ff = 100;
  bool exhaustive = false;
  uint64_t workload_seed = 1;
  uint64_t campaign_seed = 1;
  std::string workload_file;                   // hex stimulus, optional
  std::vector<std::string> observed_outputs;   // empty = all outputs
};

struct TrainingSelection {
  std::vector<std::string> flipflops;  // explicit list wins over count
  int count = 5;
  uint64_t seed = 1;
};

struct ReportOptions {
  int bins = 20;
  bool filter_outliers = false;
};

struct PipelineConfig {
  std::string netlist_path;
  std::string netlist_format = "auto";  // auto | verilog | json
  std::string workdir = ".";
  WalkConfig walk;
  EmbeddingConfig embedding;
  std::vector<int> hidden_dims = {4, 2};
  GcnConfig gcn;  // layer_dims assembled at train time from the embeddings
  CampaignSettings campaign;
  TrainingSelection training;
  ReportOptions report;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError("config: section '" + section + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok)
      throw ConfigError("config: unknown key '" + item.key() + "' in " + section);
  }
}

template <typename T>
inline T get_or(const nlohmann::json& j, const char* key, T def,
                const std::string& section) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: bad value for '" + section + "." + key + "'");
  }
}

}  // namespace detail

inline PipelineConfig parse_pipeline_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  using detail::check_keys;
  using detail::get_or;
  check_keys(j, "top level",
             {"netlist", "format", "workdir", "walk", "embedding", "gcn",
              "campaign", "training", "report"});
  PipelineConfig c;
  c.netlist_path = get_or<std::string>(j, "netlist", "", "top level");
  c.netlist_format = get_or<std::string>(j, "format", "auto", "top level");
  c.workdir = get_or<std::string>(j, "workdir", ".", "top level");
  if (c.netlist_format != "auto" && c.netlist_format != "verilog" &&
      c.netlist_format != "json")
    throw ConfigError("config: format must be auto, verilog, or json");

  if (j.contains("walk")) {
    const auto& w = j.at("walk");
    check_keys(w, "walk",
               {"walks_per_node", "walk_length", "return_p", "inout_q", "seed"});
    c.walk.walks_per_node = get_or(w, "walks_per_node", c.walk.walks_per_node, "walk");
    c.walk.walk_length = get_or(w, "walk_length", c.walk.walk_length, "walk");
    c.walk.return_param_p = get_or(w, "return_p", c.walk.return_param_p, "walk");
    c.walk.inout_param_q = get_or(w, "inout_q", c.walk.inout_param_q, "walk");
    c.walk.rng_seed = get_or(w, "seed", c.walk.rng_seed, "walk");
  }
  if (j.contains("embedding")) {
    const auto& e = j.at("embedding");
    check_keys(e, "embedding",
               {"dimension", "window", "negatives", "epochs", "learning_rate",
                "learning_rate_min", "seed"});
    c.embedding.dimension = get_or(e, "dimension", c.embedding.dimension, "embedding");
    c.embedding.window = get_or(e, "window", c.embedding.window, "embedding");
    c.embedding.negatives_per_positive =
        get_or(e, "negatives", c.embedding.negatives_per_positive, "embedding");
    c.embedding.epochs = get_or(e, "epochs", c.embedding.epochs, "embedding");
    c.embedding.learning_rate =
        get_or(e, "learning_rate", c.embedding.learning_rate, "embedding");
    c.embedding.learning_rate_min =
        get_or(e, "learning_rate_min", c.embedding.learning_rate_min, "embedding");
    c.embedding.rng_seed = get_or(e, "seed", c.embedding.rng_seed, "embedding");
  }
  if (j.contains("gcn")) {
    const auto& g = j.at("gcn");
    check_keys(g, "gcn",
               {"hidden_dims", "learning_rate", "epochs", "beta1", "beta2",
                "epsilon", "seed"});
    c.hidden_dims = get_or(g, "hidden_dims", c.hidden_dims, "gcn");
    c.gcn.learning_rate = get_or(g, "learning_rate", c.gcn.learning_rate, "gcn");
    c.gcn.epochs = get_or(g, "epochs", c.gcn.epochs, "gcn");
    c.gcn.adam_beta1 = get_or(g, "beta1", c.gcn.adam_beta1, "gcn");
    c.gcn.adam_beta2 = get_or(g, "beta2", c.gcn.adam_beta2, "gcn");
    c.gcn.adam_epsilon = get_or(g, "epsilon", c.gcn.adam_epsilon, "gcn");
    c.gcn.weight_init_seed = get_or(g, "seed", c.gcn.weight_init_seed, "gcn");
  }
  if (j.contains("campaign")) {
    const auto& k = j.at("campaign");
    check_keys(k, "campaign",
               {"n_cycles", "injections_per_ff", "exhaustive", "workload_seed",
                "campaign_seed", "workload_file", "observed_outputs"});
    c.campaign.n_cycles = get_or(k, "n_cycles", c.campaign.n_cycles, "campaign");
    c.campaign.injections_per_ff =
        get_or(k, "injections_per_ff", c.campaign.injections_per_ff, "campaign");
    c.campaign.exhaustive = get_or(k, "exhaustive", c.campaign.exhaustive, "campaign");
    c.campaign.workload_seed =
        get_or(k, "workload_seed", c.campaign.workload_seed, "campaign");
    c.campaign.campaign_seed =
        get_or(k, "campaign_seed", c.campaign.campaign_seed, "campaign");
    c.campaign.workload_file =
        get_or(k, "workload_file", c.campaign.workload_file, "campaign");
    c.campaign.observed_outputs =
        get_or(k, "observed_outputs", c.campaign.observed_outputs, "campaign");
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    check_keys(t, "training", {"flipflops", "count", "seed"});
    c.training.flipflops = get_or(t, "flipflops", c.training.flipflops, "training");
    c.training.count = get_or(t, "count", c.training.count, "training");
    c.training.seed = get_or(t, "seed", c.training.seed, "training");
  }
  if (j.contains("report")) {
    const auto& r = j.at("report");
    check_keys(r, "report", {"bins", "filter_outliers"});
    c.report.bins = get_or(r, "bins", c.report.bins, "report");
    c.report.filter_outliers =
        get_or(r, "filter_outliers", c.report.filter_outliers, "report");
  }
  if (c.campaign.n_cycles < 1) throw ConfigError("config: campaign.n_cycles must be >= 1");
  if (c.campaign.injections_per_ff < 1)
    throw ConfigError("config: campaign.injections_per_ff must be >= 1");
  if (c.report.bins < 1) throw ConfigError("config: report.bins must be >= 1");
  for (int d : c.hidden_dims)
    if (d < 1) throw ConfigError("config: gcn.hidden_dims entries must be >= 1");
  return c;
}

// A master seed replaces every stage seed with a value derived from it, so
// one flag reseeds the whole experiment while stages stay decorrelated.
inline void apply_seed_override(PipelineConfig& c, uint64_t master) {
  c.walk.rng_seed = seed_combine(master, 1);
  c.embedding.rng_seed = seed_combine(master, 2);
  c.gcn.weight_init_seed = seed_combine(master, 3);
  c.campaign.workload_seed = seed_combine(master, 4);
  c.campaign.campaign_seed = seed_combine(master, 5);
  c.training.seed = seed_combine(master, 6);
}

// ---------------------------------------------------------------------------
// Artifact plumbing

namespace detail {

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline std::string artifact_path(const PipelineConfig& c, const char* name) {
  return (std::filesystem::path(c.workdir) / name).string();
}

// Reads a stage output, or says which stage would have produced it.
inline std::string require_artifact(const PipelineConfig& c, const char* name,
                                    const char* producing_stage) {
  const std::string path = artifact_path(c, name);
  if (!std::filesystem::exists(path))
    throw IoError("missing artifact '" + path + "'; run the " +
                  producing_stage + " stage first");
  return read_text_file(path);
}

inline void ensure_workdir(const PipelineConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.workdir, ec);
  if (ec) throw IoError("cannot create workdir '" + c.workdir + "': " + ec.message());
}

}  // namespace detail

inline Netlist load_netlist(const PipelineConfig& c) {
  if (c.netlist_path.empty())
    throw ConfigError("config: netlist path is required for this stage");
  NetlistFormat fmt;
  if (c.netlist_format == "verilog") {
    fmt = NetlistFormat::Verilog;
  } else if (c.netlist_format == "json") {
    fmt = NetlistFormat::Json;
  } else {
    fmt = std::filesystem::path(c.netlist_path).extension() == ".json"
              ? NetlistFormat::Json
              : NetlistFormat::Verilog;
  }
  return parse_netlist(detail::read_text_file(c.netlist_path), fmt);
}

inline Workload build_workload(const PipelineConfig& c, const Netlist& n) {
  Workload w;
  if (!c.campaign.workload_file.empty())
    w = workload_from_hex(n, detail::read_text_file(c.campaign.workload_file));
  else
    w = random_workload(n, c.campaign.n_cycles, c.campaign.workload_seed);
  if (!c.campaign.observed_outputs.empty())
    w.observed_outputs = c.campaign.observed_outputs;
  return w;
}

// Stratified pick: flip-flops sorted by (fdr, name) are split into k
// contiguous strata and one is drawn per stratum, covering the label range
// instead of clustering.
inline std::vector<FdrRow> select_training_rows(const FdrTable& labels,
                                                const TrainingSelection& sel) {
  if (labels.rows.empty()) throw ConfigError("training selection: no labels");
  if (!sel.flipflops.empty()) {
    std::set<std::string> chosen(sel.flipflops.begin(), sel.flipflops.end());
    if (chosen.size() != sel.flipflops.size())
      throw ConfigError("training selection: duplicate flip-flop name");
    std::vector<FdrRow> rows;
    for (const auto& name : sel.flipflops) {
      const FdrRow* r = labels.find(name);
      if (!r) throw ConfigError("training selection: unknown flip-flop '" + name + "'");
      rows.push_back(*r);
    }
    return rows;
  }
  const int n = static_cast<int>(labels.rows.size());
  if (sel.count < 1 || sel.count > n)
    throw ConfigError("training selection: count must be in 1.." + std::to_string(n));
  std::vector<FdrRow> sorted = labels.rows;
  std::sort(sorted.begin(), sorted.end(), [](const FdrRow& a, const FdrRow& b) {
    return a.fdr != b.fdr ? a.fdr < b.fdr : a.flipflop < b.flipflop;
  });
  std::vector<FdrRow> rows;
  const int k = sel.count;
  for (int i = 0; i < k; ++i) {
    const int lo = static_cast<int>(static_cast<long>(i) * n / k);
    const int hi = static_cast<int>(static_cast<long>(i + 1) * n / k);
    Rng rng(seed_combine(sel.seed, static_cast<uint64_t>(i)));
    rows.push_back(sorted[lo + static_cast<int>(rng.index(hi - lo))]);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Stages. Each one reads its inputs from disk and writes its outputs to the
// workdir, so any stage can be rerun in isolation.

inline void stage_graph(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  const CircuitGraph g = build_graph(load_netlist(c));
  detail::write_text_file(detail::artifact_path(c, "circuit.gml"), export_gml(g));
}

inline void stage_embed(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  const CircuitGraph g = import_gml(detail::require_artifact(c, "circuit.gml", "graph"));
  const FeatureMatrix x = embed(g, c.walk, c.embedding);
  detail::write_text_file(detail::artifact_path(c, "embeddings.csv"),
                          write_embeddings_csv(x));
}

inline void stage_labels(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  const Netlist n = load_netlist(c);
  const Workload w = build_workload(c, n);
  const FdrTable labels =
      c.campaign.exhaustive
          ? exhaustive_fdr(n, w)
          : run_campaign(n, w, c.campaign.injections_per_ff, c.campaign.campaign_seed);
  detail::write_text_file(detail::artifact_path(c, "labels.csv"), write_fdr_csv(labels));
}

namespace detail {

struct GraphInputs {
  CircuitGraph graph;
  SparseMatrix s;
  FeatureMatrix x;
};

inline GraphInputs load_graph_inputs(const PipelineConfig& c) {
  GraphInputs gi;
  gi.graph = import_gml(require_artifact(c, "circuit.gml", "graph"));
  gi.s = normalize_adjacency(adjacency_matrix(gi.graph));
  gi.x = read_embeddings_csv(require_artifact(c, "embeddings.csv", "embed"));
  if (gi.x.rows() != gi.graph.size())
    throw ValidationError("embeddings row count " + std::to_string(gi.x.rows()) +
                          " does not match graph size " +
                          std::to_string(gi.graph.size()));
  return gi;
}

inline int node_index_of_flipflop(const CircuitGraph& g, const std::string& name) {
  const int id = g.node_by_name(name);
  if (id < 0 || g.nodes[id].kind != NodeKind::Flipflop)
    throw ValidationError("flip-flop '" + name + "' not found in graph");
  return id;
}

inline std::string render_loss_csv(const std::vector<double>& loss_history) {
  std::ostringstream out;
  out << "epoch,loss\n";
  char buf[40];
  for (size_t i = 0; i < loss_history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g", loss_history[i]);
    out << i << ',' << buf << "\n";
  }
  return out.str();
}

}  // namespace detail

inline void stage_train(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  detail::GraphInputs gi = detail::load_graph_inputs(c);
  const FdrTable labels = read_fdr_csv(
      detail::require_artifact(c, "labels.csv", "labels"), FdrSource::Simulated);
  const std::vector<FdrRow> chosen = select_training_rows(labels, c.training);

  TrainingSet ts;
  for (const auto& row : chosen) {
    ts.node_indices.push_back(detail::node_index_of_flipflop(gi.graph, row.flipflop));
    ts.labels.push_back(row.fdr);
  }
  GcnConfig gcfg = c.gcn;
  gcfg.layer_dims.clear();
  gcfg.layer_dims.push_back(gi.x.cols());
  for (int d : c.hidden_dims) gcfg.layer_dims.push_back(d);
  gcfg.layer_dims.push_back(1);

  const TrainResult res = train(gi.s, gi.x, ts, gcfg);
  detail::write_text_file(detail::artifact_path(c, "model.txt"),
                          write_model(res.model, gcfg));
  detail::write_text_file(detail::artifact_path(c, "loss.csv"),
                          detail::render_loss_csv(res.loss_history));
  FdrTable training_set;
  training_set.source = FdrSource::Simulated;
  training_set.rows = chosen;
  detail::write_text_file(detail::artifact_path(c, "training_set.csv"),
                          write_fdr_csv(training_set));
}

inline void stage_predict(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  detail::GraphInputs gi = detail::load_graph_inputs(c);
  const LoadedModel lm = read_model(detail::require_artifact(c, "model.txt", "train"));
  if (lm.layer_dims.front() != gi.x.cols())
    throw ValidationError("model expects " + std::to_string(lm.layer_dims.front()) +
                          "-dimensional features, embeddings have " +
                          std::to_string(gi.x.cols()));
  std::vector<PredictTarget> targets;
  for (int id : gi.graph.flipflop_nodes())
    targets.push_back({id, gi.graph.nodes[id].name});
  const FdrTable pred = predict(gi.s, gi.x, lm.model, targets);
  detail::write_text_file(detail::artifact_path(c, "predictions.csv"),
                          write_fdr_csv(pred));
}

inline void stage_report(const PipelineConfig& c) {
  detail::ensure_workdir(c);
  const FdrTable pred = read_fdr_csv(
      detail::require_artifact(c, "predictions.csv", "predict"), FdrSource::Predicted);
  const FdrTable sim = read_fdr_csv(
      detail::require_artifact(c, "labels.csv", "labels"), FdrSource::Simulated);
  const CompareReport rep =
      compare_report(pred, sim, c.report.filter_outliers, c.report.bins);
  detail::write_text_file(detail::artifact_path(c, "report.csv"), render_report_csv(rep));
  detail::write_text_file(detail::artifact_path(c, "ci.dat"), render_ci_dat(rep));
  detail::write_text_file(detail::artifact_path(c, "hist_sim.dat"),
                          render_hist_dat(rep.hist_simulated));
  detail::write_text_file(detail::artifact_path(c, "hist_pred.dat"),
                          render_hist_dat(rep.hist_predicted));
  detail::write_text_file(detail::artifact_path(c, "sorted.dat"), render_sorted_dat(rep));
}

inline void run_pipeline(const PipelineConfig& c) {
  stage_graph(c);
  stage_embed(c);
  stage_labels(c);
  stage_train(c);
  stage_predict(c);
  stage_report(c);
}

}  // namespace derate
