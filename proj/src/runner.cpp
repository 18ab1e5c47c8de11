#include "runner.h"

#include <filesystem>
#include <set>

#include "engine.h"
#include "export.h"
#include "metrics.h"

namespace geopipe {

namespace {

std::string prepare_out_dir(const std::string& out_dir) {
  if (out_dir.empty()) throw ConfigError("out", "output directory required");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    throw ConfigError("out", "cannot create " + out_dir + ": " + ec.message());
  }
  return out_dir + "/";
}

struct SimRun {
  ParallelismPlan plan;
  Timeline timeline;
};

SimRun simulate(const RunConfig& c) {
  SimRun r;
  r.plan = build_plan(c.topo, c.model, c.dp_cells, c.pipelines_per_cell,
                      c.dc_order, c.tp_degree);
  r.timeline =
      run(r.plan, c.policy, c.model, c.profile, c.topo, c.sched,
          c.with_allreduce);
  return r;
}

TimeNs horizon_of(const RunConfig& c, const Timeline& t) {
  return c.horizon_ms ? ms_to_ns(*c.horizon_ms) : t.makespan;
}

}  // namespace

void apply_overrides(RunConfig& config, const CliOverrides& overrides) {
  if (overrides.policy) {
    static const std::set<std::string> valid{"gpipe", "1f1b", "varuna",
                                             "atlas"};
    if (!valid.count(*overrides.policy)) {
      throw ConfigError("policy", "must be one of gpipe, 1f1b, varuna, atlas");
    }
    config.policy = *overrides.policy;
    config.select_policy = *overrides.policy;
  }
  if (overrides.seed) config.seed = *overrides.seed;
  if (overrides.multi_conn) config.sched.multi_conn = *overrides.multi_conn;
  if (overrides.recompute) config.sched.recompute = *overrides.recompute;
  if (overrides.mem_limit) {
    if (*overrides.mem_limit < 1) {
      throw ConfigError("mem_limit", "must be >= 1");
    }
    config.sched.mem_limit = *overrides.mem_limit;
  }
  if (overrides.horizon_ms) {
    if (!(*overrides.horizon_ms > 0)) {
      throw ConfigError("horizon", "must be > 0");
    }
    config.horizon_ms = *overrides.horizon_ms;
  }
}

void run_simulate(const std::string& config_text, const CliOverrides& ov,
                  const std::string& out_dir) {
  RunConfig c = load_run_config(config_text);
  apply_overrides(c, ov);
  const std::string out = prepare_out_dir(out_dir);
  SimRun r = simulate(c);

  std::optional<Timeline> reference;
  if (c.reference_policy) {
    reference = run(r.plan, *c.reference_policy, c.model, c.profile, c.topo,
                    c.sched, c.with_allreduce);
  }
  MetricsReport rep =
      report(r.timeline, reference ? &*reference : nullptr,
             c.horizon_ms ? std::optional<TimeNs>(ms_to_ns(*c.horizon_ms))
                          : std::nullopt);
  write_text_file(out + "metrics.csv", metrics_csv(rep));
  write_text_file(out + "schedule.csv", schedule_csv(r.timeline));
  write_text_file(out + "trace.json", chrome_trace_json(r.timeline));
}

void run_trace(const std::string& config_text, const CliOverrides& ov,
               const std::string& out_dir) {
  RunConfig c = load_run_config(config_text);
  apply_overrides(c, ov);
  const std::string out = prepare_out_dir(out_dir);
  SimRun r = simulate(c);
  write_text_file(out + "trace.json", chrome_trace_json(r.timeline));
}

std::string run_select_dc(const std::string& config_text,
                          const CliOverrides& ov, const std::string& out_dir) {
  RunConfig c = load_run_config(config_text);
  apply_overrides(c, ov);
  const std::string out = prepare_out_dir(out_dir);
  SelectionReport rep = select(selection_input(c));
  write_text_file(out + "selection.csv", selection_csv(rep));
  return selection_table(rep);
}

void run_whatif(const std::string& config_text, const CliOverrides& ov,
                const std::string& out_dir) {
  auto configs = expand_scenarios(config_text);
  const std::string out = prepare_out_dir(out_dir);
  std::vector<WhatIfScenario> scenarios;
  for (auto& [name, cfg] : configs) {
    apply_overrides(cfg, ov);
    scenarios.push_back({name, selection_input(cfg)});
  }
  write_text_file(out + "whatif.csv", whatif_csv(whatif(scenarios)));
}

void run_bubbletea(const std::string& config_text, const CliOverrides& ov,
                   const std::string& out_dir) {
  RunConfig c = load_run_config(config_text);
  apply_overrides(c, ov);
  const std::string out = prepare_out_dir(out_dir);
  SimRun r = simulate(c);
  const TimeNs horizon = horizon_of(c, r.timeline);

  auto pipelines = build_prefill_pipelines(r.plan, c.prefill);
  std::vector<PrefillRequest> requests;
  if (c.requests_csv_path) {
    requests = parse_requests_csv(read_text_file(*c.requests_csv_path));
  } else if (c.synthetic_count) {
    requests = synthetic_requests(*c.synthetic_count, c.seed, ns_to_ms(horizon),
                                  c.prefill);
  } else if (c.saturating) {
    requests = saturating_requests(r.timeline, pipelines, c.prefill, horizon);
  }
  PlacementResult res =
      schedule_prefills(r.timeline, requests, pipelines, c.prefill, horizon);
  write_text_file(out + "placements.csv", placements_csv(res));
  write_text_file(
      out + "bubbletea_metrics.csv",
      bubbletea_metrics_csv(utilization(r.timeline, horizon),
                            utilization(res.augmented, horizon),
                            requests.size(), res.accepted.size(),
                            res.rejected.size()));
  write_text_file(out + "trace.json", chrome_trace_json(res.augmented));
}

}  // namespace geopipe
