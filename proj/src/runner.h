#pragma once

#include <optional>
#include <string>

#include "config.h"

namespace geopipe {

// Command-line overrides applied on top of a parsed config. The policy
// override steers both simulate and the selection sweep.
struct CliOverrides {
  std::optional<std::string> policy;
  std::optional<unsigned> seed;
  std::optional<bool> multi_conn;
  std::optional<bool> recompute;
  std::optional<int> mem_limit;
  std::optional<double> horizon_ms;
};

void apply_overrides(RunConfig& config, const CliOverrides& overrides);

// Each runner parses the config text, applies the overrides, executes one
// command, and writes its artifacts under out_dir (created if missing).
// Errors surface as ConfigError / InsufficientGpus / std::runtime_error.

// Writes metrics.csv, schedule.csv, trace.json.
void run_simulate(const std::string& config_text, const CliOverrides& ov,
                  const std::string& out_dir);

// Writes trace.json only.
void run_trace(const std::string& config_text, const CliOverrides& ov,
               const std::string& out_dir);

// Writes selection.csv; returns the human-readable table.
std::string run_select_dc(const std::string& config_text,
                          const CliOverrides& ov, const std::string& out_dir);

// Expands the scenario list and writes whatif.csv.
void run_whatif(const std::string& config_text, const CliOverrides& ov,
                const std::string& out_dir);

// Simulates the training timeline, fills its bubbles with the configured
// request stream, and writes placements.csv, bubbletea_metrics.csv,
// trace.json (augmented timeline).
void run_bubbletea(const std::string& config_text, const CliOverrides& ov,
                   const std::string& out_dir);

}  // namespace geopipe
