#include "export.h"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

namespace geopipe {

namespace {

using nlohmann::json;

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

const char* kind_letter(TaskKind k) {
  switch (k) {
    case TaskKind::Forward: return "F";
    case TaskKind::Backward: return "B";
    case TaskKind::Recompute: return "R";
    case TaskKind::AllReduce: return "AR";
    case TaskKind::Prefill: return "P";
  }
  return "?";
}

std::string partitions_string(const std::map<std::string, int>& parts) {
  std::string out;
  for (const auto& [dc, n] : parts) {
    if (!out.empty()) out += ';';
    out += dc + ':' + std::to_string(n);
  }
  return out;
}

void append_selection_row(std::string& out, const SelectionRow& row,
                          bool chosen) {
  out += std::to_string(row.d);
  out += ',';
  out += row.feasible ? '1' : '0';
  out += ',';
  out += fixed6(row.pp_time_ms);
  out += ',';
  out += fixed6(row.allreduce_time_ms);
  out += ',';
  out += fixed6(row.total_time_ms);
  out += ',';
  out += fixed6(row.throughput);
  out += ',';
  out += chosen ? '1' : '0';
  out += ',';
  out += partitions_string(row.partitions);
  out += '\n';
}

}  // namespace

std::string chrome_trace_json(const Timeline& timeline) {
  json events = json::array();

  // Stable link thread ids, allocated in sorted key order.
  std::map<std::tuple<int, int, int, int>, int> link_tid;
  for (const ScheduledTransfer& x : timeline.transfers) {
    int lane = x.pooled_pipelines > 1 ? -1 : x.pipeline_id;
    link_tid.emplace(
        std::make_tuple(x.cell_id, x.boundary, static_cast<int>(x.direction),
                        lane),
        0);
  }
  int next_tid = 100000;
  for (auto& [key, tid] : link_tid) tid = next_tid++;

  std::map<int, std::set<int>> gpus_by_cell;
  for (const ScheduledTask& t : timeline.tasks) {
    gpus_by_cell[t.cell_id].insert(t.gpu_id);
  }
  for (const auto& [cell, gpus] : gpus_by_cell) {
    for (int gpu : gpus) {
      events.push_back({{"name", "thread_name"},
                        {"ph", "M"},
                        {"pid", cell},
                        {"tid", gpu},
                        {"args", {{"name", "gpu " + std::to_string(gpu)}}}});
    }
  }
  for (const auto& [key, tid] : link_tid) {
    auto [cell, boundary, dir, lane] = key;
    std::string name =
        std::string(dir == 0 ? "act" : "grad") + " link b" +
        std::to_string(boundary) +
        (lane < 0 ? std::string(" pooled")
                  : " pipeline " + std::to_string(lane));
    events.push_back({{"name", "thread_name"},
                      {"ph", "M"},
                      {"pid", cell},
                      {"tid", tid},
                      {"args", {{"name", name}}}});
  }

  for (const ScheduledTask& t : timeline.tasks) {
    std::string name = std::string(kind_letter(t.kind));
    if (t.kind == TaskKind::AllReduce) {
      name += " s" + std::to_string(t.stage);
    } else if (t.kind == TaskKind::Prefill) {
      name += " r" + std::to_string(t.microbatch) + " s" +
              std::to_string(t.stage);
    } else {
      name += " m" + std::to_string(t.microbatch) + " s" +
              std::to_string(t.stage);
    }
    events.push_back({{"name", name},
                      {"cat", task_kind_name(t.kind)},
                      {"ph", "X"},
                      {"ts", static_cast<double>(t.start) / 1000.0},
                      {"dur", static_cast<double>(t.end - t.start) / 1000.0},
                      {"pid", t.cell_id},
                      {"tid", t.gpu_id},
                      {"args",
                       {{"pipeline", t.pipeline_id},
                        {"microbatch", t.microbatch},
                        {"stage", t.stage}}}});
  }
  for (const ScheduledTransfer& x : timeline.transfers) {
    int lane = x.pooled_pipelines > 1 ? -1 : x.pipeline_id;
    int tid = link_tid.at(std::make_tuple(
        x.cell_id, x.boundary, static_cast<int>(x.direction), lane));
    std::string name =
        std::string(x.direction == Direction::ActivationFwd ? "act" : "grad") +
        " m" + std::to_string(x.microbatch) + " b" +
        std::to_string(x.boundary);
    events.push_back(
        {{"name", name},
         {"cat", direction_name(x.direction)},
         {"ph", "X"},
         {"ts", static_cast<double>(x.start) / 1000.0},
         {"dur", static_cast<double>(x.end - x.start) / 1000.0},
         {"pid", x.cell_id},
         {"tid", tid},
         {"args",
          {{"pipeline", x.pipeline_id},
           {"microbatch", x.microbatch},
           {"boundary", x.boundary},
           {"bytes", x.bytes},
           {"pooled_pipelines", x.pooled_pipelines},
           {"arrival_ms", static_cast<double>(x.arrival) / 1e6}}}});
  }

  json doc;
  doc["traceEvents"] = std::move(events);
  doc["displayTimeUnit"] = "ms";
  return doc.dump(2) + "\n";
}

std::string schedule_csv(const Timeline& timeline) {
  std::string out =
      "type,gpu,cell,pipeline,kind,microbatch,stage,boundary,direction,bytes,"
      "start_ms,end_ms,arrival_ms,pooled_pipelines\n";
  for (const ScheduledTask& t : timeline.tasks) {
    out += "task," + std::to_string(t.gpu_id) + ',' +
           std::to_string(t.cell_id) + ',' + std::to_string(t.pipeline_id) +
           ',' + task_kind_name(t.kind) + ',' + std::to_string(t.microbatch) +
           ',' + std::to_string(t.stage) + ",,,," + fixed6(ns_to_ms(t.start)) +
           ',' + fixed6(ns_to_ms(t.end)) + ",,\n";
  }
  for (const ScheduledTransfer& x : timeline.transfers) {
    out += "transfer,," + std::to_string(x.cell_id) + ',' +
           std::to_string(x.pipeline_id) + ",transfer," +
           std::to_string(x.microbatch) + ",," + std::to_string(x.boundary) +
           ',' + direction_name(x.direction) + ',' + std::to_string(x.bytes) +
           ',' + fixed6(ns_to_ms(x.start)) + ',' + fixed6(ns_to_ms(x.end)) +
           ',' + fixed6(ns_to_ms(x.arrival)) + ',' +
           std::to_string(x.pooled_pipelines) + '\n';
  }
  return out;
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "metric,value\n";
  out += "makespan_ms," + fixed6(report.iteration_ms) + '\n';
  out += "throughput_iters_per_s," + fixed6(report.throughput_iters_per_s) +
         '\n';
  out += "mean_utilization," + fixed6(report.mean_utilization) + '\n';
  out += "bubble_fraction," + fixed6(report.bubble_fraction) + '\n';
  out += "wan_busy_fraction_fwd," + fixed6(report.wan_busy_fraction_fwd) +
         '\n';
  out += "wan_busy_fraction_bwd," + fixed6(report.wan_busy_fraction_bwd) +
         '\n';
  if (report.slowdown_vs_reference) {
    out += "slowdown_vs_reference," + fixed6(*report.slowdown_vs_reference) +
           '\n';
  }
  for (const auto& [gpu, util] : report.per_gpu_utilization) {
    out += "utilization_gpu_" + std::to_string(gpu) + ',' + fixed6(util) +
           '\n';
  }
  return out;
}

std::string selection_csv(const SelectionReport& report) {
  std::string out =
      "d,feasible,pp_time_ms,allreduce_time_ms,total_time_ms,throughput,"
      "chosen,partitions\n";
  for (const SelectionRow& row : report.rows) {
    append_selection_row(out, row, row.d == report.chosen_d);
  }
  return out;
}

std::string selection_table(const SelectionReport& report) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%4s %9s %14s %14s %14s %12s  %s\n", "D",
                "feasible", "pp_ms", "allreduce_ms", "total_ms", "iters/s",
                "partitions");
  out += buf;
  for (const SelectionRow& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%4d %9s %14.3f %14.3f %14.3f %12.4f  %s%s\n",
                  row.d, row.feasible ? "yes" : "no", row.pp_time_ms,
                  row.allreduce_time_ms, row.total_time_ms, row.throughput,
                  partitions_string(row.partitions).c_str(),
                  row.d == report.chosen_d ? "  <-- chosen" : "");
    out += buf;
  }
  return out;
}

std::string whatif_csv(const std::vector<WhatIfRow>& rows) {
  std::string out =
      "scenario,d,feasible,pp_time_ms,allreduce_time_ms,total_time_ms,"
      "throughput,chosen,partitions\n";
  for (const WhatIfRow& w : rows) {
    out += w.scenario + ',';
    append_selection_row(out, w.row, w.chosen);
  }
  return out;
}

std::string placements_csv(const PlacementResult& result) {
  // Rows keyed and ordered by request id.
  std::map<int, std::string> rows;
  for (const PrefillPlacement& p : result.accepted) {
    rows[p.request.id] =
        std::to_string(p.request.id) + ",1," +
        std::to_string(p.pipeline_index) + ',' +
        fixed6(ns_to_ms(p.stage_intervals.front().start)) + ',' +
        fixed6(p.ttft_overhead_ms) + ",\n";
  }
  for (const PrefillRejection& r : result.rejected) {
    rows[r.request.id] =
        std::to_string(r.request.id) + ",0,,,," + r.reason + '\n';
  }
  std::string out = "id,accepted,pipeline,start_ms,ttft_overhead_ms,reason\n";
  for (const auto& [id, row] : rows) out += row;
  return out;
}

std::string bubbletea_metrics_csv(double util_before, double util_after,
                                  size_t requests, size_t accepted,
                                  size_t rejected) {
  std::string out = "metric,value\n";
  out += "utilization_before," + fixed6(util_before) + '\n';
  out += "utilization_after," + fixed6(util_after) + '\n';
  out += "requests," + std::to_string(requests) + '\n';
  out += "accepted," + std::to_string(accepted) + '\n';
  out += "rejected," + std::to_string(rejected) + '\n';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ConfigError("out", "cannot open " + path + " for writing");
  f << content;
  if (!f) throw ConfigError("out", "failed writing " + path);
}

}  // namespace geopipe
