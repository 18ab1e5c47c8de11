#pragma once

// Structural validity checker for generated schedules and executed
// timelines. Every expectation is recomputed here from the plan, model, and
// topology (not taken from the scheduler's internals) so the checks stay
// independent of the code under test. Returns the first violation as a
// human-readable string, or an empty string when the timeline is valid.

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "comm_model.h"
#include "schedule.h"
#include "scheduler.h"
#include "topology.h"
#include "workload.h"

namespace testsupport {

using namespace geopipe;

struct ValidationInput {
  const ParallelismPlan& plan;
  const ModelSpec& model;
  const ComputeProfile& profile;
  const ClusterTopology& topo;
  SchedulerOptions opts;
  bool with_allreduce = false;
};

namespace detail {

struct BoundaryInfo {
  bool wan = false;
  TimeNs ser_spatial = 0;
  TimeNs ser_pooled = 0;
  TimeNs latency = 0;
};

inline std::vector<BoundaryInfo> boundaries_of_cell(const DpCell& cell,
                                                    const ValidationInput& in) {
  const auto& stages = cell.pipelines[0].stages;
  const int C = static_cast<int>(cell.pipelines.size());
  const long long bytes = activation_bytes(in.model.activation_shape());
  const int n_conns = in.opts.multi_conn ? in.opts.n_connections : 1;
  std::vector<BoundaryInfo> out;
  for (size_t s = 0; s + 1 < stages.size(); ++s) {
    BoundaryInfo b;
    b.wan = stages[s].dc_id != stages[s + 1].dc_id;
    if (b.wan) {
      double lat =
          in.topo.wan.latency_between(stages[s].dc_id, stages[s + 1].dc_id);
      double bw = effective_pair_bandwidth(lat, n_conns, in.topo.wan);
      b.ser_spatial = ms_to_ns(bytes / bw);
      b.ser_pooled = ms_to_ns(bytes / (C * bw));
      b.latency = ms_to_ns(lat);
    }
    out.push_back(b);
  }
  return out;
}

inline std::string where(int c, int p, int s, int m) {
  std::ostringstream os;
  os << " at cell " << c << " pipeline " << p << " stage " << s
     << " microbatch " << m;
  return os.str();
}

}  // namespace detail

inline std::string validate_timeline(const Timeline& tl,
                                     const ValidationInput& in) {
  const int D = static_cast<int>(in.plan.dp_cells.size());
  const int C = in.plan.pipelines_per_cell();
  const int S = in.plan.num_stages();
  const int M = in.model.num_microbatches;
  const long long bytes = activation_bytes(in.model.activation_shape());
  const bool rec = in.opts.recompute;

  using TaskKey = std::tuple<int, int, int, int, TaskKind>;  // c,p,s,m,kind
  std::map<TaskKey, std::vector<const ScheduledTask*>> by_key;
  std::map<int, std::vector<const ScheduledTask*>> by_gpu;

  for (const ScheduledTask& t : tl.tasks) {
    if (t.kind == TaskKind::Prefill) continue;
    if (t.cell_id < 0 || t.cell_id >= D) return "task with unknown cell id";
    if (t.pipeline_id < 0 || t.pipeline_id >= C)
      return "task with unknown pipeline id";
    if (t.stage < 0 || t.stage >= S) return "task with unknown stage";
    if (t.kind != TaskKind::AllReduce && (t.microbatch < 0 || t.microbatch >= M))
      return "task with unknown microbatch";
    if (t.end <= t.start)
      return "empty or inverted task interval" +
             detail::where(t.cell_id, t.pipeline_id, t.stage, t.microbatch);
    int expect_gpu = in.plan.dp_cells[t.cell_id]
                         .pipelines[t.pipeline_id]
                         .stages[t.stage]
                         .gpu_ids.front();
    if (t.gpu_id != expect_gpu)
      return "task on the wrong GPU" +
             detail::where(t.cell_id, t.pipeline_id, t.stage, t.microbatch);
    by_key[{t.cell_id, t.pipeline_id, t.stage, t.microbatch, t.kind}]
        .push_back(&t);
    by_gpu[t.gpu_id].push_back(&t);
  }

  // Completeness: exactly one forward and one backward (plus one recompute
  // when enabled) per (cell, pipeline, stage, microbatch); one all-reduce
  // per (cell, pipeline, stage) when requested.
  for (int c = 0; c < D; ++c)
    for (int p = 0; p < C; ++p)
      for (int s = 0; s < S; ++s) {
        for (int m = 0; m < M; ++m) {
          auto count = [&](TaskKind k) {
            auto it = by_key.find({c, p, s, m, k});
            return it == by_key.end() ? 0 : static_cast<int>(it->second.size());
          };
          if (count(TaskKind::Forward) != 1)
            return "forward count != 1" + detail::where(c, p, s, m);
          if (count(TaskKind::Backward) != 1)
            return "backward count != 1" + detail::where(c, p, s, m);
          if (count(TaskKind::Recompute) != (rec ? 1 : 0))
            return "recompute count mismatch" + detail::where(c, p, s, m);
        }
        if (in.with_allreduce) {
          auto it = by_key.find({c, p, s, 0, TaskKind::AllReduce});
          if (it == by_key.end() || it->second.size() != 1)
            return "all-reduce count != 1" + detail::where(c, p, s, 0);
        }
      }

  // GPU exclusivity.
  for (auto& [gpu, tasks] : by_gpu) {
    std::sort(tasks.begin(), tasks.end(),
              [](const ScheduledTask* a, const ScheduledTask* b) {
                return a->start < b->start;
              });
    for (size_t i = 1; i < tasks.size(); ++i)
      if (tasks[i]->start < tasks[i - 1]->end)
        return "overlapping tasks on GPU " + std::to_string(gpu);
  }

  // Transfers: correct sizes, durations, arrivals, and link exclusivity.
  using XferKey = std::tuple<int, int, int, int, Direction>;  // c,p,m,b,dir
  std::map<XferKey, const ScheduledTransfer*> xfer;
  // Lane: transfers with pooled_pipelines > 1 share one per-cell lane;
  // spatial transfers get a per-pipeline lane.
  std::map<std::tuple<int, int, Direction, int>,
           std::vector<const ScheduledTransfer*>>
      lanes;
  for (const ScheduledTransfer& x : tl.transfers) {
    if (x.cell_id < 0 || x.cell_id >= D) return "transfer with unknown cell";
    if (x.boundary < 0 || x.boundary >= S - 1)
      return "transfer with unknown boundary";
    auto binfo = detail::boundaries_of_cell(in.plan.dp_cells[x.cell_id], in);
    const auto& b = binfo[x.boundary];
    if (!b.wan) return "transfer on an intra-DC boundary";
    if (x.bytes != bytes) return "transfer bytes mismatch";
    TimeNs expect_ser = x.pooled_pipelines > 1 ? b.ser_pooled : b.ser_spatial;
    if (x.end - x.start != expect_ser) return "transfer serialization mismatch";
    if (x.arrival != x.end + b.latency) return "transfer arrival mismatch";
    XferKey k{x.cell_id, x.pipeline_id, x.microbatch, x.boundary, x.direction};
    if (xfer.count(k)) return "duplicate transfer";
    xfer[k] = &x;
    int lane = x.pooled_pipelines > 1 ? -1 : x.pipeline_id;
    lanes[{x.cell_id, x.boundary, x.direction, lane}].push_back(&x);
  }
  for (auto& [key, xs] : lanes) {
    std::sort(xs.begin(), xs.end(),
              [](const ScheduledTransfer* a, const ScheduledTransfer* b) {
                return a->start < b->start;
              });
    for (size_t i = 1; i < xs.size(); ++i)
      if (xs[i]->start < xs[i - 1]->end) return "overlapping link transfers";
  }

  // Causality along each pipeline chain.
  auto task_of = [&](int c, int p, int s, int m,
                     TaskKind k) -> const ScheduledTask* {
    auto it = by_key.find({c, p, s, m, k});
    return it == by_key.end() ? nullptr : it->second.front();
  };
  for (int c = 0; c < D; ++c) {
    auto binfo = detail::boundaries_of_cell(in.plan.dp_cells[c], in);
    for (int p = 0; p < C; ++p)
      for (int m = 0; m < M; ++m) {
        for (int s = 0; s < S; ++s) {
          const ScheduledTask* f = task_of(c, p, s, m, TaskKind::Forward);
          if (s > 0) {
            const ScheduledTask* prev =
                task_of(c, p, s - 1, m, TaskKind::Forward);
            if (binfo[s - 1].wan) {
              auto it = xfer.find(
                  {c, p, m, s - 1, Direction::ActivationFwd});
              if (it == xfer.end())
                return "missing activation transfer" +
                       detail::where(c, p, s - 1, m);
              if (it->second->start < prev->end)
                return "activation transfer before producer end" +
                       detail::where(c, p, s - 1, m);
              if (f->start < it->second->arrival)
                return "forward before activation arrival" +
                       detail::where(c, p, s, m);
            } else if (f->start < prev->end) {
              return "forward before upstream forward" +
                     detail::where(c, p, s, m);
            }
          }
          // Backward (preceded by its recompute when enabled).
          const ScheduledTask* bw = task_of(c, p, s, m, TaskKind::Backward);
          const ScheduledTask* first =
              rec ? task_of(c, p, s, m, TaskKind::Recompute) : bw;
          if (rec && bw->start < first->end)
            return "backward before its recompute" + detail::where(c, p, s, m);
          if (s == S - 1) {
            if (first->start < f->end)
              return "drain before forward at the last stage" +
                     detail::where(c, p, s, m);
          } else {
            const ScheduledTask* down =
                task_of(c, p, s + 1, m, TaskKind::Backward);
            if (binfo[s].wan) {
              auto it = xfer.find({c, p, m, s, Direction::GradientBwd});
              if (it == xfer.end())
                return "missing gradient transfer" + detail::where(c, p, s, m);
              if (it->second->start < down->end)
                return "gradient transfer before producer end" +
                       detail::where(c, p, s, m);
              if (first->start < it->second->arrival)
                return "backward before gradient arrival" +
                       detail::where(c, p, s, m);
            } else if (first->start < down->end) {
              return "backward before downstream backward" +
                     detail::where(c, p, s, m);
            }
          }
        }
      }
  }

  // Makespan is the maximum task end; transfers are always consumed by a
  // later task so they never extend past it.
  TimeNs max_end = 0;
  for (const ScheduledTask& t : tl.tasks) max_end = std::max(max_end, t.end);
  if (tl.makespan != max_end) return "makespan does not match maximum end";
  for (const ScheduledTransfer& x : tl.transfers)
    if (x.arrival > max_end) return "transfer outlives the last task";

  return "";
}

}  // namespace testsupport
