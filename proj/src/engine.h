#pragma once

#include <string>

#include "schedule.h"
#include "scheduler.h"
#include "topology.h"
#include "workload.h"

namespace geopipe {

// Discrete-event executor. Tasks run on exclusive GPUs in their per-GPU
// program order; transfers run on exclusive link resources in FIFO order
// (per-pipeline links for spatial policies, per-cell pooled links when the
// schedule was built with bandwidth pooling). Event ties are broken by
// (time, event kind, cell, pipeline, microbatch, stage).
//
// When `hold_reserved_starts` is set the executor also waits for each
// task's and transfer's precomputed start (reservation replay); otherwise
// items dispatch greedily as dependencies and resources allow. Prefill
// placements always hold their reserved starts, since they are placements
// into known idle windows rather than policy decisions.
//
// Throws DeadlockError with the blocked dependency cycle when no runnable
// event exists while work remains.
Timeline replay_schedule(const Schedule& schedule, bool hold_reserved_starts);

// Generates the policy's schedule and executes it. Policies other than
// `atlas` execute greedily; `atlas` replays its precomputed reservations.
Timeline run(const ParallelismPlan& plan, const std::string& policy,
             const ModelSpec& model, const ComputeProfile& profile,
             const ClusterTopology& topo, const SchedulerOptions& opts = {},
             bool with_allreduce = false);

double iteration_time_ms(const Timeline& timeline);

// makespan(t) / makespan(baseline).
double slowdown(const Timeline& timeline, const Timeline& baseline);

}  // namespace geopipe
