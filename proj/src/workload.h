#pragma once

#include <optional>
#include <string>
#include <vector>

#include "comm_model.h"
#include "topology.h"

namespace geopipe {

struct ModelSpec {
  int num_layers = 1;
  long long hidden = 1;
  long long seq_len = 1;
  long long microbatch = 1;           // sequences per microbatch (B)
  int num_microbatches = 1;           // M
  double params_per_layer = 0.0;      // 0 => default 12 * H^2
  int bytes_per_element = 2;
  int layers_per_partition = 1;       // partition count P = ceil(layers / this)

  int partition_count() const {
    return (num_layers + layers_per_partition - 1) / layers_per_partition;
  }
  double effective_params_per_layer() const {
    return params_per_layer > 0
               ? params_per_layer
               : 12.0 * static_cast<double>(hidden) * static_cast<double>(hidden);
  }
  TensorShape activation_shape() const {
    return TensorShape{microbatch, seq_len, hidden, bytes_per_element};
  }
};

// Per-microbatch per-stage phase durations. Either given explicitly or
// derived from a communication-to-compute ratio: fwd = comm_time / ratio,
// bwd = 2 x fwd, recompute = fwd, where comm_time is the cross-DC activation
// serialization time at the per-pipeline bandwidth cap.
struct ComputeProfile {
  double fwd_ms = 0.0;
  double bwd_ms = 0.0;
  double recompute_ms = 0.0;
  std::optional<double> ratio_C;  // set when durations derive from the ratio

  static ComputeProfile explicit_durations(double fwd, double bwd,
                                           double recompute);
  static ComputeProfile from_ratio(double ratio, const ModelSpec& model,
                                   const WanProfile& wan);
};

struct Stage {
  std::string dc_id;
  std::vector<int> gpu_ids;       // tp_degree entries
  int partition_begin = 0;        // [begin, end) partition indices
  int partition_end = 0;
  int tp_degree = 1;
};

struct Pipeline {
  std::vector<Stage> stages;
};

struct DpCell {
  std::vector<Pipeline> pipelines;  // exactly C entries
};

struct ParallelismPlan {
  std::vector<DpCell> dp_cells;  // D entries
  int pipelines_per_cell() const {
    return dp_cells.empty() ? 0
                            : static_cast<int>(dp_cells[0].pipelines.size());
  }
  int num_stages() const {
    return dp_cells.empty() || dp_cells[0].pipelines.empty()
               ? 0
               : static_cast<int>(dp_cells[0].pipelines[0].stages.size());
  }
  int total_gpus_used() const;
};

// Greedy partition walk: each DC (taken in dc_order) hosts
// min(partitions_left, floor(gpu_count / (D * C * tp_degree))) consecutive
// partitions; every cell and pipeline shares the same stage->DC map.
// Throws InsufficientGpus when partitions remain after the walk.
ParallelismPlan build_plan(const ClusterTopology& topo, const ModelSpec& model,
                           int D, int C, std::vector<std::string> dc_order = {},
                           int tp_degree = 1);

// Default dc_order: decreasing GPU availability (stable on ties by config
// order).
std::vector<std::string> default_dc_order(const ClusterTopology& topo);

// Max over cross-DC stage boundaries of
// (activation serialization time at the per-pipeline pair cap) / fwd_ms;
// zero when the plan never crosses a DC boundary.
double comm_compute_ratio(const ParallelismPlan& plan, const ModelSpec& model,
                          const ClusterTopology& topo,
                          const ComputeProfile& profile);

}  // namespace geopipe
