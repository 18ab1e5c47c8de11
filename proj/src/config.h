#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bubbletea.h"
#include "dc_select.h"
#include "scheduler.h"
#include "topology.h"
#include "workload.h"

namespace geopipe {

// One fully validated experiment description, assembled from a JSON config
// document plus command-line overrides. Field paths in every ConfigError use
// the document's key names.
struct RunConfig {
  ClusterTopology topo;
  ModelSpec model;
  ComputeProfile profile;

  // parallelism
  int dp_cells = 1;
  int pipelines_per_cell = 1;
  int tp_degree = 1;
  std::vector<std::string> dc_order;  // empty: by GPU count descending

  // simulate
  std::string policy = "atlas";
  bool with_allreduce = false;
  std::optional<std::string> reference_policy;
  SchedulerOptions sched;
  unsigned seed = 42;
  std::optional<double> horizon_ms;

  // select (fall back to the parallelism section where omitted)
  std::optional<int> select_d_max;
  int select_pipelines_per_cell = 0;  // 0: use pipelines_per_cell
  int select_tp_degree = 0;           // 0: use tp_degree
  std::vector<std::string> select_dc_order;  // empty: use dc_order
  std::string select_policy = "atlas";

  // prefill
  PrefillModel prefill;
  std::optional<std::string> requests_csv_path;
  std::optional<int> synthetic_count;
  bool saturating = false;
};

// Parses and validates the JSON text; unknown keys are ignored so documents
// can carry commentary fields.
RunConfig load_run_config(const std::string& config_text);

// Reads the file and delegates to load_run_config. A missing or unreadable
// file is a ConfigError("config", ...).
RunConfig load_run_config_file(const std::string& path);

// Applies each scenario's JSON merge-patch to the base document (minus the
// scenario list itself) and parses the result; returns (name, config) pairs
// in document order. A document without scenarios yields one pair named
// "base".
std::vector<std::pair<std::string, RunConfig>> expand_scenarios(
    const std::string& config_text);

// The selection problem implied by the config's topology/model/select keys.
SelectionInput selection_input(const RunConfig& config);

// CSV rows "id,arrival_ms,tokens" (header row optional), sorted by arrival.
std::vector<PrefillRequest> parse_requests_csv(const std::string& text);

// Reads path fully; ConfigError when it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace geopipe
