// derate: predict per-flip-flop failure rates of a gate-level netlist.
//
// A run is a chain of file-backed stages inside a working directory:
//   graph -> embed -> labels -> train -> predict -> report
// `pipeline` runs all of them in order. Every stage can be rerun alone as
// long as its input artifacts exist.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "derate/pipeline.hpp"

namespace {

struct StageDef {
  const char* name;
  const char* help;
  void (*run)(const derate::PipelineConfig&);
  const char* artifacts;
};

const std::vector<StageDef>& stage_defs() {
  static const std::vector<StageDef> defs = {
      {"graph", "Parse the netlist and export its signal-flow graph",
       derate::stage_graph, "circuit.gml"},
      {"embed", "Learn per-node feature vectors from random walks over the graph",
       derate::stage_embed, "embeddings.csv"},
      {"labels", "Run the fault-injection campaign and write per-flip-flop failure rates",
       derate::stage_labels, "labels.csv"},
      {"train", "Fit the graph network on the selected training flip-flops",
       derate::stage_train, "model.txt loss.csv training_set.csv"},
      {"predict", "Write model predictions for every flip-flop",
       derate::stage_predict, "predictions.csv"},
      {"report", "Compare predictions against campaign labels",
       derate::stage_report, "report.csv ci.dat hist_sim.dat hist_pred.dat sorted.dat"},
      {"pipeline", "Run every stage in order", derate::run_pipeline,
       "circuit.gml embeddings.csv labels.csv model.txt loss.csv "
       "training_set.csv predictions.csv report.csv ci.dat hist_sim.dat "
       "hist_pred.dat sorted.dat"},
  };
  return defs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-flip-flop failure-rate prediction for gate-level netlists"};
  app.require_subcommand(1);

  std::string config_path;
  std::string workdir;
  std::string netlist;
  uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON configuration file")
      ->type_name("PATH");
  CLI::Option* seed_opt =
      app.add_option("--seed", seed,
                     "Master seed; rederives every stage seed in the config");
  CLI::Option* workdir_opt =
      app.add_option("--workdir", workdir, "Working directory for stage artifacts")
          ->type_name("DIR");
  CLI::Option* netlist_opt =
      app.add_option("--netlist", netlist, "Netlist source (.v or .json)")
          ->type_name("PATH");

  for (const auto& def : stage_defs()) {
    CLI::App* sub = app.add_subcommand(def.name, def.help);
    sub->fallthrough();  // let --config/--seed/--workdir follow the subcommand
    sub->footer(std::string("Writes: ") + def.artifacts);
    if (std::string(def.name) == "graph")
      sub->add_option("netlist", netlist, "Netlist source (.v or .json)")
          ->type_name("PATH");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    derate::PipelineConfig cfg;
    if (!config_path.empty())
      cfg = derate::parse_pipeline_config(derate::detail::read_text_file(config_path));
    if (*seed_opt) derate::apply_seed_override(cfg, seed);
    if (*workdir_opt) cfg.workdir = workdir;
    if (*netlist_opt || !netlist.empty()) cfg.netlist_path = netlist;

    for (const auto& def : stage_defs()) {
      if (app.got_subcommand(def.name)) {
        def.run(cfg);
        std::printf("%s: wrote %s in %s\n", def.name, def.artifacts,
                    cfg.workdir.c_str());
        return 0;
      }
    }
    std::fprintf(stderr, "error: no subcommand\n");
    return 1;
  } catch (const derate::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const derate::GuardError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const derate::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
