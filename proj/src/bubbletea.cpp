#include "bubbletea.h"

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "comm_model.h"

namespace geopipe {

namespace {

struct BusySpan {
  Interval iv;
  bool training = false;
};

// Sorted, coalesce-free busy list per GPU (tasks never overlap per GPU).
std::map<int, std::vector<BusySpan>> busy_by_gpu(const Timeline& t,
                                                 TimeNs horizon) {
  std::map<int, std::vector<BusySpan>> busy;
  for (const ScheduledTask& task : t.tasks) {
    TimeNs lo = std::max<TimeNs>(task.start, 0);
    TimeNs hi = std::min(task.end, horizon);
    if (lo >= hi) continue;
    busy[task.gpu_id].push_back(
        {{lo, hi}, task.kind != TaskKind::Prefill});
  }
  for (auto& [gpu, spans] : busy) {
    std::sort(spans.begin(), spans.end(), [](const BusySpan& a,
                                             const BusySpan& b) {
      return a.iv.start < b.iv.start;
    });
  }
  return busy;
}

struct Gap {
  Interval iv;
  bool before_training = false;  // the gap abuts a training task on its right
};

std::vector<Gap> gaps_of(const std::vector<BusySpan>& spans, TimeNs horizon) {
  std::vector<Gap> gaps;
  TimeNs cursor = 0;
  for (const BusySpan& s : spans) {
    if (s.iv.start > cursor) gaps.push_back({{cursor, s.iv.start}, s.training});
    cursor = std::max(cursor, s.iv.end);
  }
  if (cursor < horizon) gaps.push_back({{cursor, horizon}, false});
  return gaps;
}

}  // namespace

std::vector<Bubble> extract_bubbles(const Timeline& timeline, TimeNs horizon) {
  if (horizon <= 0) throw ConfigError("horizon", "must be positive");
  std::vector<Bubble> out;
  for (const auto& [gpu, spans] : busy_by_gpu(timeline, horizon)) {
    for (const Gap& g : gaps_of(spans, horizon)) {
      out.push_back({gpu, g.iv.start, g.iv.end});
    }
  }
  return out;
}

double prefill_duration_ms(int tokens, const PrefillModel& pm) {
  if (tokens < 1 || tokens > pm.max_tokens) {
    throw ConfigError("request.tokens", "must be in [1, " +
                                            std::to_string(pm.max_tokens) +
                                            "]");
  }
  return pm.saturation_ms * static_cast<double>(tokens) /
         static_cast<double>(pm.max_tokens);
}

double prefill_pp_overhead_ms(const TensorShape& shape, int n_boundaries,
                              double stage_bw, double latency_ms) {
  if (n_boundaries < 0) {
    throw ConfigError("n_boundaries", "must be >= 0");
  }
  if (n_boundaries == 0) return 0.0;
  double bytes = static_cast<double>(activation_bytes(shape));
  return n_boundaries * transfer_time_ms(bytes, stage_bw, latency_ms);
}

std::vector<PrefillPipeline> build_prefill_pipelines(
    const ParallelismPlan& plan, const PrefillModel& pm) {
  const int d = static_cast<int>(plan.dp_cells.size());
  const int c = plan.pipelines_per_cell();
  const int s_count = plan.num_stages();
  std::vector<PrefillPipeline> out;
  for (int pipe = 0; pipe < c; ++pipe) {
    for (int stage = 0; stage < s_count; ++stage) {
      PrefillPipeline pp;
      pp.dc_id = plan.dp_cells[0].pipelines[pipe].stages[stage].dc_id;
      for (int cell = 0; cell < d; ++cell) {
        const Stage& st = plan.dp_cells[cell].pipelines[pipe].stages[stage];
        if (st.dc_id != pp.dc_id) {
          throw ConfigError("plan",
                            "stage replicas span datacenters; prefill "
                            "pipelines must stay within one DC");
        }
        pp.gpus.push_back(st.gpu_ids.front());
      }
      int base = pm.inference_layers / d;
      int extra = pm.inference_layers % d;
      long long worst_layers = 0;
      for (int cell = 0; cell < d; ++cell) {
        int layers = base + (cell < extra ? 1 : 0);
        pp.layers_per_gpu.push_back(layers);
        worst_layers = std::max<long long>(worst_layers, layers);
      }
      pp.per_stage_memory_bytes = static_cast<long long>(
          static_cast<double>(worst_layers) * pm.params_per_layer() *
          pm.bytes_per_element);
      if (pp.per_stage_memory_bytes > pm.memory_budget_bytes) {
        throw ConfigError(
            "prefill.memory_budget_bytes",
            "inference model needs " +
                std::to_string(pp.per_stage_memory_bytes) +
                " bytes per stage, over the budget of " +
                std::to_string(pm.memory_budget_bytes));
      }
      out.push_back(std::move(pp));
    }
  }
  return out;
}

PlacementResult schedule_prefills(const Timeline& timeline,
                                  const std::vector<PrefillRequest>& requests,
                                  const std::vector<PrefillPipeline>& pipelines,
                                  const PrefillModel& pm, TimeNs horizon) {
  if (horizon <= 0) throw ConfigError("horizon", "must be positive");
  PlacementResult result;
  result.augmented = timeline;
  auto busy = busy_by_gpu(timeline, horizon);
  const TimeNs guard = ms_to_ns(pm.guard_ms);

  for (const PrefillRequest& req : requests) {
    const double dur_ms = prefill_duration_ms(req.tokens, pm);
    const TensorShape act{1, req.tokens, pm.inference_hidden,
                          pm.bytes_per_element};
    bool placed = false;
    for (size_t pi = 0; pi < pipelines.size() && !placed; ++pi) {
      const PrefillPipeline& pp = pipelines[pi];
      const int k_stages = static_cast<int>(pp.gpus.size());
      const TimeNs ovh = ms_to_ns(prefill_pp_overhead_ms(
          act, 1, pm.stage_bw, pm.boundary_latency_ms));
      int total_layers = 0;
      for (int l : pp.layers_per_gpu) total_layers += l;
      std::vector<TimeNs> dur(k_stages), off(k_stages);
      TimeNs cursor = 0;
      for (int k = 0; k < k_stages; ++k) {
        dur[k] = ms_to_ns(dur_ms * pp.layers_per_gpu[k] /
                          std::max(1, total_layers));
        off[k] = cursor;
        cursor += dur[k] + ovh;
      }

      const TimeNs arrival = ms_to_ns(req.arrival_ms);
      std::set<TimeNs> candidates{arrival};
      std::vector<std::vector<Gap>> stage_gaps(k_stages);
      for (int k = 0; k < k_stages; ++k) {
        stage_gaps[k] = gaps_of(busy[pp.gpus[k]], horizon);
        for (const Gap& g : stage_gaps[k]) {
          if (g.iv.start - off[k] >= arrival)
            candidates.insert(g.iv.start - off[k]);
        }
      }
      for (TimeNs t0 : candidates) {
        bool ok = true;
        for (int k = 0; k < k_stages && ok; ++k) {
          const TimeNs lo = t0 + off[k];
          const TimeNs hi = lo + dur[k];
          ok = false;
          for (const Gap& g : stage_gaps[k]) {
            if (g.iv.start > lo) break;
            TimeNs usable_end = g.iv.end - (g.before_training ? guard : 0);
            if (lo >= g.iv.start && hi <= usable_end) {
              ok = true;
              break;
            }
          }
        }
        if (!ok) continue;
        PrefillPlacement pl;
        pl.request = req;
        pl.pipeline_index = static_cast<int>(pi);
        for (int k = 0; k < k_stages; ++k) {
          TimeNs lo = t0 + off[k];
          TimeNs hi = lo + dur[k];
          pl.stage_intervals.push_back({lo, hi});
          result.augmented.tasks.push_back({pp.gpus[k], k,
                                            static_cast<int>(pi),
                                            TaskKind::Prefill, req.id, k, lo,
                                            hi});
          auto& spans = busy[pp.gpus[k]];
          BusySpan span{{lo, hi}, false};
          spans.insert(std::upper_bound(spans.begin(), spans.end(), span,
                                        [](const BusySpan& a,
                                           const BusySpan& b) {
                                          return a.iv.start < b.iv.start;
                                        }),
                       span);
        }
        pl.finish = pl.stage_intervals.back().end;
        pl.ttft_overhead_ms =
            prefill_pp_overhead_ms(act, k_stages - 1, pm.stage_bw,
                                   pm.boundary_latency_ms);
        result.accepted.push_back(std::move(pl));
        placed = true;
        break;
      }
    }
    if (!placed) result.rejected.push_back({req, "NoCapacity"});
  }
  finalize_schedule(result.augmented);
  return result;
}

double utilization(const Timeline& timeline, TimeNs horizon) {
  if (horizon <= 0) throw ConfigError("horizon", "must be positive");
  std::map<int, TimeNs> busy;
  for (const ScheduledTask& t : timeline.tasks) {
    TimeNs lo = std::max<TimeNs>(t.start, 0);
    TimeNs hi = std::min(t.end, horizon);
    busy[t.gpu_id] += std::max<TimeNs>(0, hi - lo);
  }
  if (busy.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [gpu, ns] : busy) {
    sum += static_cast<double>(ns) / static_cast<double>(horizon);
  }
  return sum / static_cast<double>(busy.size());
}

std::vector<PrefillRequest> saturating_requests(
    const Timeline& timeline, const std::vector<PrefillPipeline>& pipelines,
    const PrefillModel& pm, TimeNs horizon) {
  auto busy = busy_by_gpu(timeline, horizon);
  std::vector<PrefillRequest> out;
  int next_id = 0;
  for (const PrefillPipeline& pp : pipelines) {
    // Fill the head GPU's idle windows; for single-stage pipelines this
    // saturates the whole pipeline.
    for (const Gap& g : gaps_of(busy[pp.gpus.front()], horizon)) {
      TimeNs cursor = g.iv.start;
      while (cursor < g.iv.end) {
        double gap_ms = ns_to_ms(g.iv.end - cursor);
        int tokens = static_cast<int>(gap_ms * pm.max_tokens /
                                      pm.saturation_ms);
        tokens = std::min(tokens, pm.max_tokens);
        while (tokens >= 1 &&
               cursor + ms_to_ns(prefill_duration_ms(tokens, pm)) > g.iv.end) {
          tokens -= 1;
        }
        if (tokens < 1) break;
        out.push_back({next_id++, ns_to_ms(cursor), tokens, "default"});
        cursor += ms_to_ns(prefill_duration_ms(tokens, pm));
      }
    }
  }
  return out;
}

std::vector<PrefillRequest> synthetic_requests(int count, unsigned seed,
                                               double horizon_ms,
                                               const PrefillModel& pm) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> arr(0.0, std::max(0.0, horizon_ms));
  std::uniform_int_distribution<int> tok(1, pm.max_tokens);
  std::vector<PrefillRequest> out;
  out.reserve(count);
  std::vector<double> arrivals(count);
  for (int i = 0; i < count; ++i) arrivals[i] = arr(rng);
  std::sort(arrivals.begin(), arrivals.end());
  for (int i = 0; i < count; ++i) {
    out.push_back({i, arrivals[i], tok(rng), "default"});
  }
  return out;
}

}  // namespace geopipe
