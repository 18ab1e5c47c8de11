#include "workload.h"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace geopipe {

ComputeProfile ComputeProfile::explicit_durations(double fwd, double bwd,
                                                  double recompute) {
  if (fwd <= 0 || bwd <= 0 || recompute < 0) {
    throw ConfigError("compute", "durations must be positive");
  }
  ComputeProfile p;
  p.fwd_ms = fwd;
  p.bwd_ms = bwd;
  p.recompute_ms = recompute;
  return p;
}

ComputeProfile ComputeProfile::from_ratio(double ratio, const ModelSpec& model,
                                          const WanProfile& wan) {
  if (ratio <= 0) throw ConfigError("compute.ratio_C", "must be > 0");
  double comm_ms =
      static_cast<double>(activation_bytes(model.activation_shape())) /
      wan.pair_bw_cap;
  ComputeProfile p;
  p.fwd_ms = comm_ms / ratio;
  p.bwd_ms = 2.0 * p.fwd_ms;
  p.recompute_ms = p.fwd_ms;
  p.ratio_C = ratio;
  return p;
}

int ParallelismPlan::total_gpus_used() const {
  int total = 0;
  for (const auto& cell : dp_cells) {
    for (const auto& pipe : cell.pipelines) {
      for (const auto& stage : pipe.stages) {
        total += static_cast<int>(stage.gpu_ids.size());
      }
    }
  }
  return total;
}

std::vector<std::string> default_dc_order(const ClusterTopology& topo) {
  std::vector<std::string> order;
  for (const auto& d : topo.datacenters) order.push_back(d.id);
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) {
                     return topo.dc(a).gpu_count > topo.dc(b).gpu_count;
                   });
  return order;
}

ParallelismPlan build_plan(const ClusterTopology& topo, const ModelSpec& model,
                           int D, int C, std::vector<std::string> dc_order,
                           int tp_degree) {
  if (D < 1 || C < 1 || tp_degree < 1) {
    throw ConfigError("parallelism", "D, C and tp_degree must be >= 1");
  }
  if (dc_order.empty()) dc_order = default_dc_order(topo);
  const int P = model.partition_count();

  // Walk dc_order assigning consecutive partitions (one partition per stage).
  struct DcBlock {
    std::string dc_id;
    int first_partition;
    int count;
  };
  std::vector<DcBlock> blocks;
  int assigned = 0;
  for (const std::string& dc_id : dc_order) {
    if (assigned >= P) break;
    const Datacenter& d = topo.dc(dc_id);
    int capacity = d.gpu_count / (D * C * tp_degree);
    int take = std::min(P - assigned, capacity);
    if (take > 0) {
      blocks.push_back({dc_id, assigned, take});
      assigned += take;
    }
  }
  if (assigned < P) {
    throw InsufficientGpus("plan needs " + std::to_string(P) +
                           " stages x " + std::to_string(D * C * tp_degree) +
                           " GPUs but only " + std::to_string(assigned) +
                           " stages fit");
  }

  // Deterministic GPU numbering: per DC, GPUs are handed out in increasing
  // index order across (cell, pipeline, stage).
  std::map<std::string, int> next_gpu;
  int gpu_base = 0;
  std::map<std::string, int> dc_base;
  for (const auto& d : topo.datacenters) {
    dc_base[d.id] = gpu_base;
    gpu_base += d.gpu_count;
  }

  ParallelismPlan plan;
  plan.dp_cells.resize(D);
  for (int cell = 0; cell < D; ++cell) {
    plan.dp_cells[cell].pipelines.resize(C);
    for (int pipe = 0; pipe < C; ++pipe) {
      auto& stages = plan.dp_cells[cell].pipelines[pipe].stages;
      for (const DcBlock& block : blocks) {
        for (int k = 0; k < block.count; ++k) {
          Stage st;
          st.dc_id = block.dc_id;
          st.partition_begin = block.first_partition + k;
          st.partition_end = st.partition_begin + 1;
          st.tp_degree = tp_degree;
          for (int g = 0; g < tp_degree; ++g) {
            st.gpu_ids.push_back(dc_base[block.dc_id] +
                                 next_gpu[block.dc_id]++);
          }
          stages.push_back(std::move(st));
        }
      }
    }
  }
  return plan;
}

double comm_compute_ratio(const ParallelismPlan& plan, const ModelSpec& model,
                          const ClusterTopology& topo,
                          const ComputeProfile& profile) {
  if (plan.dp_cells.empty()) return 0.0;
  const auto& stages = plan.dp_cells[0].pipelines[0].stages;
  double bytes = static_cast<double>(activation_bytes(model.activation_shape()));
  double best = 0.0;
  for (size_t s = 0; s + 1 < stages.size(); ++s) {
    if (stages[s].dc_id == stages[s + 1].dc_id) continue;
    double comm_ms = bytes / topo.wan.pair_bw_cap;
    best = std::max(best, comm_ms / profile.fwd_ms);
  }
  return best;
}

}  // namespace geopipe
