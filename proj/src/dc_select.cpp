#include "dc_select.h"

#include <algorithm>
#include <cmath>

#include "comm_model.h"

namespace geopipe {

namespace {

ComputeProfile resolve_profile(const SelectionInput& in) {
  if (in.profile.ratio_C.has_value()) {
    return ComputeProfile::from_ratio(*in.profile.ratio_C, in.model,
                                      in.topo.wan);
  }
  return in.profile;
}

int default_d_max(const SelectionInput& in) {
  long long total = in.topo.total_gpus();
  long long per_cell = static_cast<long long>(in.pipelines_per_cell) *
                       in.model.partition_count() * in.tp_degree;
  return static_cast<int>(std::max<long long>(0, total / per_cell));
}

SelectionRow evaluate_d(const SelectionInput& in, int d,
                        const ComputeProfile& profile) {
  SelectionRow row;
  row.d = d;
  ParallelismPlan plan;
  try {
    plan = build_plan(in.topo, in.model, d, in.pipelines_per_cell, in.dc_order,
                      in.tp_degree);
  } catch (const InsufficientGpus&) {
    return row;  // infeasible: +inf times, throughput 0
  }
  for (const Stage& st : plan.dp_cells[0].pipelines[0].stages) {
    row.partitions[st.dc_id] += st.partition_end - st.partition_begin;
  }

  Schedule sched = schedule_for_policy(in.policy, plan, in.model, profile,
                                       in.topo, in.sched);
  row.pp_time_ms = sched.makespan_ms();

  const int n = d * in.pipelines_per_cell;
  double worst = 0.0;
  for (const Stage& st : plan.dp_cells[0].pipelines[0].stages) {
    int layers = 0;
    for (int k = st.partition_begin; k < st.partition_end; ++k) {
      int begin = k * in.model.layers_per_partition;
      int end = std::min(begin + in.model.layers_per_partition,
                         in.model.num_layers);
      layers += std::max(0, end - begin);
    }
    double params = in.model.effective_params_per_layer() * layers;
    double bw = in.topo.dc(st.dc_id).intra_bw;
    worst = std::max(worst, allreduce_time_ms(params, n, bw));
  }
  row.allreduce_time_ms = worst;
  row.total_time_ms = row.pp_time_ms + row.allreduce_time_ms;
  row.throughput = static_cast<double>(d) * in.pipelines_per_cell /
                   row.total_time_ms;
  row.feasible = true;
  return row;
}

}  // namespace

double get_latency_pp(const SelectionInput& in, int d) {
  SelectionRow row = evaluate_d(in, d, resolve_profile(in));
  return row.pp_time_ms;
}

double get_latency_dp(const SelectionInput& in, int d, int n_replicas) {
  SelectionInput scoped = in;
  SelectionRow row = evaluate_d(scoped, d, resolve_profile(in));
  if (!row.feasible) return row.allreduce_time_ms;
  // Recompute at the requested ring size when it differs from d*C.
  if (n_replicas == d * in.pipelines_per_cell) return row.allreduce_time_ms;
  ParallelismPlan plan = build_plan(in.topo, in.model, d, in.pipelines_per_cell,
                                    in.dc_order, in.tp_degree);
  double worst = 0.0;
  for (const Stage& st : plan.dp_cells[0].pipelines[0].stages) {
    int layers = 0;
    for (int k = st.partition_begin; k < st.partition_end; ++k) {
      int begin = k * in.model.layers_per_partition;
      int end = std::min(begin + in.model.layers_per_partition,
                         in.model.num_layers);
      layers += std::max(0, end - begin);
    }
    double params = in.model.effective_params_per_layer() * layers;
    double bw = in.topo.dc(st.dc_id).intra_bw;
    worst = std::max(worst, allreduce_time_ms(params, n_replicas, bw));
  }
  return worst;
}

SelectionReport select(const SelectionInput& in) {
  if (in.pipelines_per_cell < 1) {
    throw ConfigError("select.pipelines_per_cell", "must be >= 1");
  }
  if (in.tp_degree < 1) throw ConfigError("select.tp_degree", "must be >= 1");
  SelectionReport report;
  const ComputeProfile profile = resolve_profile(in);
  const int d_max = std::max(1, in.d_max.value_or(default_d_max(in)));
  for (int d = 1; d <= d_max; ++d) {
    report.rows.push_back(evaluate_d(in, d, profile));
  }
  for (const SelectionRow& row : report.rows) {
    if (!row.feasible) continue;
    if (report.chosen_d == 0 ||
        row.throughput > report.rows[report.chosen_d - 1].throughput) {
      report.chosen_d = row.d;
    }
  }
  if (report.chosen_d > 0) {
    report.gpus_used = static_cast<long long>(report.chosen_d) *
                       in.pipelines_per_cell * in.model.partition_count() *
                       in.tp_degree;
  }
  return report;
}

std::vector<WhatIfRow> whatif(const std::vector<WhatIfScenario>& scenarios) {
  std::vector<WhatIfRow> table;
  for (const WhatIfScenario& sc : scenarios) {
    SelectionReport report = select(sc.input);
    for (const SelectionRow& row : report.rows) {
      table.push_back({sc.name, row, row.d == report.chosen_d});
    }
  }
  return table;
}

}  // namespace geopipe
