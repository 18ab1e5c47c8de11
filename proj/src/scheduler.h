#pragma once

#include <optional>

#include "schedule.h"
#include "topology.h"
#include "workload.h"

namespace geopipe {

struct SchedulerOptions {
  bool recompute = true;
  bool multi_conn = true;
  int n_connections = 32;         // used when multi_conn is set
  std::optional<int> mem_limit;   // default: number of stages
};

// GPipe: all forwards flush through the pipeline, then the drain runs in
// reverse microbatch order after the pipeline's last forward; spatial
// per-pipeline WAN shares.
Schedule gpipe_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                        const ComputeProfile& profile,
                        const ClusterTopology& topo,
                        const SchedulerOptions& opts = {});

// Megatron-style 1F1B: per-stage warmup of min(num_stages - s, M) forwards,
// then strict one-forward-one-backward alternation; spatial WAN shares.
Schedule onef1b_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                         const ComputeProfile& profile,
                         const ClusterTopology& topo,
                         const SchedulerOptions& opts = {});

// Varuna-style baseline: per-stage flush (all forwards back-to-back as
// arrivals allow, then recompute+backward pairs in microbatch order at every
// stage), FIFO-queued spatial transfers, no memory cap.
Schedule varuna_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                         const ComputeProfile& profile,
                         const ClusterTopology& topo,
                         const SchedulerOptions& opts = {});

// Temporal bandwidth sharing: pipelines of a cell pool their WAN bandwidth;
// forward chains are placed atomically in LocalDPRank order with transfers
// starting exactly at compute end (compute is delayed otherwise); the drain
// runs stage-downward with backward pairs right-packed into consolidated
// windows; per-stage in-flight activations respect mem_limit.
Schedule atlas_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                        const ComputeProfile& profile,
                        const ClusterTopology& topo,
                        const SchedulerOptions& opts = {});

// Appends per-stage AllReduce tasks (ring over the D*C replicas of each
// stage on the stage DC's intra fabric) after the last backward of the stage.
Schedule append_allreduce(Schedule schedule, const ParallelismPlan& plan,
                          const ModelSpec& model, const ClusterTopology& topo);

Schedule schedule_for_policy(const std::string& policy,
                             const ParallelismPlan& plan,
                             const ModelSpec& model,
                             const ComputeProfile& profile,
                             const ClusterTopology& topo,
                             const SchedulerOptions& opts = {});

}  // namespace geopipe
