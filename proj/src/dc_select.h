#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scheduler.h"
#include "topology.h"
#include "workload.h"

namespace geopipe {

// Input to the GPU-split sweep: the pipeline shape (C pipelines per cell,
// P partitions from the model) is fixed; the sweep varies the number of
// data-parallel cells D and assigns partitions to datacenters greedily.
struct SelectionInput {
  ClusterTopology topo;
  ModelSpec model;
  ComputeProfile profile;
  int pipelines_per_cell = 1;  // C
  int tp_degree = 1;
  std::optional<int> d_max;    // default: total_gpus / (C * P * tp)
  std::vector<std::string> dc_order;  // default: by GPU count descending
  std::string policy = "atlas";       // pipeline policy used for pp_time
  SchedulerOptions sched;
};

struct SelectionRow {
  int d = 0;
  std::map<std::string, int> partitions;  // DC id -> partitions hosted
  double pp_time_ms = std::numeric_limits<double>::infinity();
  double allreduce_time_ms = std::numeric_limits<double>::infinity();
  double total_time_ms = std::numeric_limits<double>::infinity();
  double throughput = 0.0;  // D*C / total_time
  bool feasible = false;
};

struct SelectionReport {
  std::vector<SelectionRow> rows;  // one per D in 1..d_max
  int chosen_d = 0;                // 0 when no feasible row exists
  long long gpus_used = 0;
};

// Pipeline-parallel iteration latency for one DP cell at the given D:
// builds the implied plan and returns the policy schedule's makespan.
// Infeasible splits yield +infinity.
double get_latency_pp(const SelectionInput& in, int d);

// All-reduce latency across N replicas: max over stages of the ring
// all-reduce time for that stage's parameters on its DC's intra fabric.
double get_latency_dp(const SelectionInput& in, int d, int n_replicas);

// Sweeps D = 1..d_max, computing total = pp + allreduce per row and choosing
// the smallest D that maximizes throughput = D*C/total.
SelectionReport select(const SelectionInput& in);

struct WhatIfScenario {
  std::string name;
  SelectionInput input;
};

struct WhatIfRow {
  std::string scenario;
  SelectionRow row;
  bool chosen = false;
};

// Runs select() per scenario and flattens the reports into one table,
// ordered by scenario index then D.
std::vector<WhatIfRow> whatif(const std::vector<WhatIfScenario>& scenarios);

}  // namespace geopipe
