#pragma once

#include <string>
#include <vector>

#include "schedule.h"
#include "topology.h"
#include "workload.h"

namespace geopipe {

// Maximal idle interval on one GPU within [0, horizon).
struct Bubble {
  int gpu_id = 0;
  TimeNs start = 0;
  TimeNs end = 0;
};

struct PrefillRequest {
  int id = 0;
  double arrival_ms = 0.0;
  int tokens = 0;
  std::string model_id;
};

// One GPU per DP cell at the same (pipeline, stage) rank; all stage
// replicas live in one DC, so the prefill pipeline never crosses the WAN.
struct PrefillPipeline {
  std::vector<int> gpus;                  // ordered, one per DP cell
  std::vector<int> layers_per_gpu;        // inference layers per stage
  long long per_stage_memory_bytes = 0;   // weight bytes resident per GPU
  std::string dc_id;
};

// Inference-side knobs. The stage bandwidth default is calibrated so a
// (B*L=8192, H=4096, fp16) activation boundary costs ~2.68 ms, i.e. 86 ms
// across 32 boundaries.
struct PrefillModel {
  double saturation_ms = 300.0;   // prefill time at max_tokens
  int max_tokens = 8192;
  double stage_bw = 25000000.0;   // bytes/ms between prefill stages
  double boundary_latency_ms = 0.0;
  double guard_ms = 0.0;          // idle gap enforced before training tasks
  long long memory_budget_bytes = 1073741824;  // 1 GiB per stage
  // Inference model dimensions (activation + weight sizing). Defaults are
  // sized so even a single-GPU stage stays inside the memory budget.
  int inference_layers = 8;
  long long inference_hidden = 1024;
  double inference_params_per_layer = 0.0;  // 0 => 12 * H^2
  int bytes_per_element = 2;

  double params_per_layer() const {
    return inference_params_per_layer > 0
               ? inference_params_per_layer
               : 12.0 * static_cast<double>(inference_hidden) *
                     static_cast<double>(inference_hidden);
  }
};

struct PrefillPlacement {
  PrefillRequest request;
  int pipeline_index = 0;
  std::vector<Interval> stage_intervals;
  TimeNs finish = 0;
  double ttft_overhead_ms = 0.0;  // pipelining overhead vs single-GPU prefill
};

struct PrefillRejection {
  PrefillRequest request;
  std::string reason;
};

struct PlacementResult {
  std::vector<PrefillPlacement> accepted;
  std::vector<PrefillRejection> rejected;
  Timeline augmented;
};

// Maximal idle intervals per GPU: the complement of busy task intervals
// within [0, horizon). Sorted by (gpu, start).
std::vector<Bubble> extract_bubbles(const Timeline& timeline, TimeNs horizon);

// 300 ms * tokens / 8192 under the defaults; tokens outside [1, max_tokens]
// is a config error.
double prefill_duration_ms(int tokens, const PrefillModel& pm = {});

// n_boundaries * transfer_time(activation bytes of shape, stage_bw, latency).
double prefill_pp_overhead_ms(const TensorShape& shape, int n_boundaries,
                              double stage_bw, double latency_ms = 0.0);

// One prefill pipeline per (pipeline, stage) rank of the plan, spanning the
// D cells. Throws when per-stage weights exceed the memory budget.
std::vector<PrefillPipeline> build_prefill_pipelines(
    const ParallelismPlan& plan, const PrefillModel& pm);

// FCFS over requests; each is placed at its earliest feasible start on the
// first pipeline whose every stage interval (staggered by stage durations
// plus the per-boundary overhead) fits inside an idle window and respects
// the guard gap before training tasks. Rejected requests get NoCapacity.
// Training tasks of the augmented timeline are bit-identical to the input.
PlacementResult schedule_prefills(const Timeline& timeline,
                                  const std::vector<PrefillRequest>& requests,
                                  const std::vector<PrefillPipeline>& pipelines,
                                  const PrefillModel& pm, TimeNs horizon);

// Mean over GPUs of busy_time / horizon; prefill tasks count as busy.
double utilization(const Timeline& timeline, TimeNs horizon);

// Deterministic stream that packs every bubble of every pipeline's head GPU
// chain: per bubble, requests sized to the largest token count whose duration
// still fits the remaining gap, repeated until no token fits. All arrivals
// are at the bubble starts, ordered by (pipeline, bubble, slot).
std::vector<PrefillRequest> saturating_requests(
    const Timeline& timeline, const std::vector<PrefillPipeline>& pipelines,
    const PrefillModel& pm, TimeNs horizon);

// Seeded random stream: exponential-ish arrival spacing and uniform token
// counts in [1, max_tokens]; deterministic for a fixed seed.
std::vector<PrefillRequest> synthetic_requests(int count, unsigned seed,
                                               double horizon_ms,
                                               const PrefillModel& pm);

}  // namespace geopipe
