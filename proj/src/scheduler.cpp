#include "scheduler.h"

#include <algorithm>
#include <cassert>
#include <map>

#include "comm_model.h"

namespace geopipe {

namespace {

// Flattened per-cell geometry: durations, WAN boundaries, link parameters.
struct CellGeom {
  int cell_id = 0;
  int C = 1;  // pipelines in the cell
  int S = 1;  // stages per pipeline
  int M = 1;  // microbatches
  std::vector<std::vector<int>> gpu;  // [pipeline][stage]
  TimeNs fwd = 0, bwd = 0, rec = 0;
  std::vector<bool> wan;           // boundary s -> s+1 crosses DCs
  std::vector<TimeNs> ser_spatial; // per-boundary occupancy, per-pipeline bw
  std::vector<TimeNs> ser_pooled;  // per-boundary occupancy, pooled bw
  std::vector<TimeNs> latency;     // per-boundary one-way latency
  long long bytes = 0;

  TimeNs pair_dur(bool recompute) const {
    return recompute ? rec + bwd : bwd;
  }
};

std::vector<CellGeom> build_geometry(const ParallelismPlan& plan,
                                     const ModelSpec& model,
                                     const ComputeProfile& profile,
                                     const ClusterTopology& topo,
                                     const SchedulerOptions& opts) {
  std::vector<CellGeom> cells;
  const long long bytes = activation_bytes(model.activation_shape());
  const int n_conns = opts.multi_conn ? opts.n_connections : 1;
  for (size_t ci = 0; ci < plan.dp_cells.size(); ++ci) {
    const DpCell& cell = plan.dp_cells[ci];
    CellGeom g;
    g.cell_id = static_cast<int>(ci);
    g.C = static_cast<int>(cell.pipelines.size());
    g.S = static_cast<int>(cell.pipelines[0].stages.size());
    g.M = model.num_microbatches;
    g.fwd = ms_to_ns(profile.fwd_ms);
    g.bwd = ms_to_ns(profile.bwd_ms);
    g.rec = ms_to_ns(profile.recompute_ms);
    g.bytes = bytes;
    for (const Pipeline& pipe : cell.pipelines) {
      std::vector<int> gpus;
      for (const Stage& st : pipe.stages) gpus.push_back(st.gpu_ids.front());
      g.gpu.push_back(std::move(gpus));
    }
    const auto& stages = cell.pipelines[0].stages;
    for (int s = 0; s + 1 < g.S; ++s) {
      bool crosses = stages[s].dc_id != stages[s + 1].dc_id;
      g.wan.push_back(crosses);
      if (crosses) {
        double lat = topo.wan.latency_between(stages[s].dc_id,
                                              stages[s + 1].dc_id);
        double bw = effective_pair_bandwidth(lat, n_conns, topo.wan);
        g.ser_spatial.push_back(ms_to_ns(bytes / bw));
        g.ser_pooled.push_back(ms_to_ns(bytes / (g.C * bw)));
        g.latency.push_back(ms_to_ns(lat));
      } else {
        g.ser_spatial.push_back(0);
        g.ser_pooled.push_back(0);
        g.latency.push_back(0);
      }
    }
    cells.push_back(std::move(g));
  }
  return cells;
}

// Shared state while generating one pipeline of one cell.
struct PipelineState {
  std::vector<TimeNs> gpu_free;                 // per stage
  std::vector<std::vector<TimeNs>> arr;         // [stage][m] forward input ready
  std::vector<std::vector<TimeNs>> fd;          // forward done
  std::vector<std::vector<TimeNs>> garr;        // gradient input ready
  std::vector<std::vector<bool>> has_garr;

  PipelineState(int S, int M)
      : gpu_free(S, 0),
        arr(S, std::vector<TimeNs>(M, 0)),
        fd(S, std::vector<TimeNs>(M, -1)),
        garr(S, std::vector<TimeNs>(M, 0)),
        has_garr(S, std::vector<bool>(M, false)) {}
};

void emit_pair(Schedule& out, const CellGeom& g, int p, int s, int m, TimeNs t,
               bool recompute) {
  if (recompute) {
    out.tasks.push_back({g.gpu[p][s], g.cell_id, p, TaskKind::Recompute, m, s,
                         t, t + g.rec});
    out.tasks.push_back({g.gpu[p][s], g.cell_id, p, TaskKind::Backward, m, s,
                         t + g.rec, t + g.rec + g.bwd});
  } else {
    out.tasks.push_back(
        {g.gpu[p][s], g.cell_id, p, TaskKind::Backward, m, s, t, t + g.bwd});
  }
}

// ---------------------------------------------------------------------------
// Flush baselines (varuna in-order drain; gpipe reverse drain with a
// last-forward barrier). Spatial links: FIFO queue per
// (pipeline, boundary, direction).
// ---------------------------------------------------------------------------

void flush_pipeline(Schedule& out, const CellGeom& g, int p, bool reverse_drain,
                    bool barrier_last_fwd, bool recompute) {
  const int S = g.S, M = g.M;
  PipelineState st(S, M);
  std::vector<TimeNs> link_free_f(std::max(S - 1, 0), 0);
  std::vector<TimeNs> link_free_b(std::max(S - 1, 0), 0);

  for (int m = 0; m < M; ++m) {
    for (int s = 0; s < S; ++s) {
      TimeNs t = std::max(st.arr[s][m], st.gpu_free[s]);
      TimeNs e = t + g.fwd;
      out.tasks.push_back(
          {g.gpu[p][s], g.cell_id, p, TaskKind::Forward, m, s, t, e});
      st.gpu_free[s] = e;
      st.fd[s][m] = e;
      if (s + 1 < S) {
        if (g.wan[s]) {
          TimeNs start = std::max(e, link_free_f[s]);
          TimeNs occ_end = start + g.ser_spatial[s];
          TimeNs arrival = occ_end + g.latency[s];
          link_free_f[s] = occ_end;
          st.arr[s + 1][m] = arrival;
          out.transfers.push_back({g.cell_id, p, m, s, Direction::ActivationFwd,
                                   g.bytes, start, occ_end, arrival, 1});
        } else {
          st.arr[s + 1][m] = e;
        }
      }
    }
  }

  const TimeNs barrier = barrier_last_fwd ? st.fd[S - 1][M - 1] : 0;
  const TimeNs dur = g.pair_dur(recompute);
  for (int s = S - 1; s >= 0; --s) {
    for (int i = 0; i < M; ++i) {
      int m = reverse_drain ? M - 1 - i : i;
      TimeNs ready = (s == S - 1) ? st.fd[s][m] : st.garr[s][m];
      ready = std::max(ready, barrier);
      TimeNs t = std::max(ready, st.gpu_free[s]);
      emit_pair(out, g, p, s, m, t, recompute);
      TimeNs e = t + dur;
      st.gpu_free[s] = e;
      if (s > 0) {
        if (g.wan[s - 1]) {
          TimeNs start = std::max(e, link_free_b[s - 1]);
          TimeNs occ_end = start + g.ser_spatial[s - 1];
          TimeNs arrival = occ_end + g.latency[s - 1];
          link_free_b[s - 1] = occ_end;
          st.garr[s - 1][m] = arrival;
          out.transfers.push_back({g.cell_id, p, m, s - 1,
                                   Direction::GradientBwd, g.bytes, start,
                                   occ_end, arrival, 1});
        } else {
          st.garr[s - 1][m] = e;
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 1F1B (Megatron-style): per-stage warmup then strict alternation.
// ---------------------------------------------------------------------------

void onef1b_pipeline(Schedule& out, const CellGeom& g, int p, bool recompute) {
  const int S = g.S, M = g.M;
  PipelineState st(S, M);
  std::vector<TimeNs> link_free_f(std::max(S - 1, 0), 0);
  std::vector<TimeNs> link_free_b(std::max(S - 1, 0), 0);

  struct Item {
    TaskKind kind;  // Forward or Backward (pair)
    int m;
  };
  std::vector<std::vector<Item>> seq(S);
  for (int s = 0; s < S; ++s) {
    int w = std::min(S - s, M);
    for (int m = 0; m < w; ++m) seq[s].push_back({TaskKind::Forward, m});
    int next_f = w, next_b = 0;
    while (next_b < M) {
      seq[s].push_back({TaskKind::Backward, next_b++});
      if (next_f < M) seq[s].push_back({TaskKind::Forward, next_f++});
    }
  }

  std::vector<size_t> cursor(S, 0);
  const TimeNs dur = g.pair_dur(recompute);
  bool progress = true;
  size_t remaining = 0;
  for (int s = 0; s < S; ++s) remaining += seq[s].size();
  while (remaining > 0) {
    if (!progress) {
      throw DeadlockError("1F1B generation stalled; dependency cycle");
    }
    progress = false;
    for (int s = S - 1; s >= 0; --s) {
      while (cursor[s] < seq[s].size()) {
        const Item& item = seq[s][cursor[s]];
        if (item.kind == TaskKind::Forward) {
          if (s > 0 && st.fd[s - 1][item.m] < 0) break;  // input not produced
          TimeNs t = std::max(st.arr[s][item.m], st.gpu_free[s]);
          TimeNs e = t + g.fwd;
          out.tasks.push_back({g.gpu[p][s], g.cell_id, p, TaskKind::Forward,
                               item.m, s, t, e});
          st.gpu_free[s] = e;
          st.fd[s][item.m] = e;
          if (s + 1 < S) {
            if (g.wan[s]) {
              TimeNs start = std::max(e, link_free_f[s]);
              TimeNs occ_end = start + g.ser_spatial[s];
              link_free_f[s] = occ_end;
              st.arr[s + 1][item.m] = occ_end + g.latency[s];
              out.transfers.push_back({g.cell_id, p, item.m, s,
                                       Direction::ActivationFwd, g.bytes, start,
                                       occ_end, occ_end + g.latency[s], 1});
            } else {
              st.arr[s + 1][item.m] = e;
            }
          }
        } else {
          if (st.fd[s][item.m] < 0) break;
          TimeNs ready;
          if (s == S - 1) {
            ready = st.fd[s][item.m];
          } else if (st.has_garr[s][item.m]) {
            ready = st.garr[s][item.m];
          } else {
            break;  // gradient not yet produced
          }
          TimeNs t = std::max(ready, st.gpu_free[s]);
          emit_pair(out, g, p, s, item.m, t, recompute);
          TimeNs e = t + dur;
          st.gpu_free[s] = e;
          if (s > 0) {
            if (g.wan[s - 1]) {
              TimeNs start = std::max(e, link_free_b[s - 1]);
              TimeNs occ_end = start + g.ser_spatial[s - 1];
              link_free_b[s - 1] = occ_end;
              st.garr[s - 1][item.m] = occ_end + g.latency[s - 1];
              out.transfers.push_back({g.cell_id, p, item.m, s - 1,
                                       Direction::GradientBwd, g.bytes, start,
                                       occ_end, occ_end + g.latency[s - 1], 1});
            } else {
              st.garr[s - 1][item.m] = e;
            }
            st.has_garr[s - 1][item.m] = true;
          }
        }
        ++cursor[s];
        --remaining;
        progress = true;
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Temporal bandwidth sharing. Pooled per-(cell, boundary, direction) links
// with exact-fit reservations; forward chains atomic per microbatch in
// LocalDPRank order; globally earliest-fit drain with makespan-neutral
// right-pack.
// ---------------------------------------------------------------------------

struct AtlasCellState {
  std::vector<PipelineState> pipes;
  std::vector<ReservationList> res_fwd;  // per boundary
  std::vector<ReservationList> res_bwd;
  std::vector<std::vector<int>> drained;   // [pipeline][stage]
  std::vector<std::vector<TimeNs>> chain_start;  // [pipeline][m]
  std::vector<std::vector<std::vector<TimeNs>>> pair_start;  // [p][s][m]
};

// Earliest pair start >= lo whose gradient transfer (when boundary s-1
// crosses the WAN) fits exactly at the pair's end.
TimeNs atlas_pair_start(const CellGeom& g, AtlasCellState& cs, int s,
                        TimeNs lo, TimeNs dur) {
  if (s > 0 && g.wan[s - 1]) {
    TimeNs slot = cs.res_bwd[s - 1].earliest_fit(lo + dur, g.ser_pooled[s - 1]);
    return slot - dur;
  }
  return lo;
}

// Emits the recompute+backward pair tasks and its gradient transfer; the
// link slot [end, end+ser) must already be reserved by the caller.
void atlas_commit_pair(Schedule& out, const CellGeom& g, AtlasCellState& cs,
                       int p, int s, int m, bool recompute, TimeNs t) {
  const TimeNs dur = g.pair_dur(recompute);
  emit_pair(out, g, p, s, m, t, recompute);
  TimeNs e = t + dur;
  cs.pipes[p].gpu_free[s] = std::max(cs.pipes[p].gpu_free[s], e);
  if (s > 0) {
    if (g.wan[s - 1]) {
      TimeNs occ_end = e + g.ser_pooled[s - 1];
      cs.pipes[p].garr[s - 1][m] = occ_end + g.latency[s - 1];
      out.transfers.push_back({g.cell_id, p, m, s - 1, Direction::GradientBwd,
                               g.bytes, e, occ_end,
                               occ_end + g.latency[s - 1], g.C});
    } else {
      cs.pipes[p].garr[s - 1][m] = e;
    }
    cs.pipes[p].has_garr[s - 1][m] = true;
  }
  cs.drained[p][s] += 1;
}

// Drains the next ready pair at the deepest stage with work remaining for
// pipeline p; used only when the memory cap binds during forward admission.
bool atlas_drain_step(Schedule& out, const CellGeom& g, AtlasCellState& cs,
                      int p, bool recompute) {
  PipelineState& st = cs.pipes[p];
  const TimeNs dur = g.pair_dur(recompute);
  for (int s = g.S - 1; s >= 0; --s) {
    int m = cs.drained[p][s];
    if (m >= g.M) continue;
    TimeNs ready;
    if (s == g.S - 1) {
      if (st.fd[s][m] < 0) continue;
      ready = st.fd[s][m];
    } else {
      if (!st.has_garr[s][m]) continue;
      ready = st.garr[s][m];
    }
    TimeNs t =
        atlas_pair_start(g, cs, s, std::max(ready, st.gpu_free[s]), dur);
    if (s > 0 && g.wan[s - 1]) {
      cs.res_bwd[s - 1].reserve(t + dur, t + dur + g.ser_pooled[s - 1]);
    }
    cs.pair_start[p][s][m] = t;
    atlas_commit_pair(out, g, cs, p, s, m, recompute, t);
    return true;
  }
  return false;
}

void atlas_cell(Schedule& out, const CellGeom& g, bool recompute,
                int mem_limit) {
  const int S = g.S, M = g.M, C = g.C;
  AtlasCellState cs;
  for (int p = 0; p < C; ++p) cs.pipes.emplace_back(S, M);
  cs.res_fwd.resize(std::max(S - 1, 0));
  cs.res_bwd.resize(std::max(S - 1, 0));
  cs.drained.assign(C, std::vector<int>(S, 0));
  cs.chain_start.assign(C, std::vector<TimeNs>(M, 0));
  cs.pair_start.assign(
      C, std::vector<std::vector<TimeNs>>(S, std::vector<TimeNs>(M, -1)));

  // Forward phase: atomic chains per microbatch, LocalDPRank order. A chain
  // is shifted until every WAN transfer can start exactly at its producing
  // compute's end.
  for (int p = 0; p < C; ++p) {
    PipelineState& st = cs.pipes[p];
    for (int m = 0; m < M; ++m) {
      // Memory-cap admission (rule 2): placing this chain adds one in-flight
      // activation at every stage.
      bool blocked = true;
      while (blocked) {
        blocked = false;
        for (int s = 0; s < S; ++s) {
          if (m - cs.drained[p][s] >= mem_limit) {
            blocked = true;
            break;
          }
        }
        if (blocked && !atlas_drain_step(out, g, cs, p, recompute)) {
          throw DeadlockError(
              "memory cap admission stalled: no drainable backward");
        }
      }

      TimeNs t0 = st.gpu_free[0];
      while (true) {
        bool ok = true;
        TimeNs cur = t0;
        for (int s = 0; s < S; ++s) {
          TimeNs start = std::max(cur, st.gpu_free[s]);
          TimeNs e = start + g.fwd;
          if (s + 1 < S) {
            if (g.wan[s]) {
              if (!cs.res_fwd[s].free_at(e, e + g.ser_pooled[s])) {
                TimeNs slot = cs.res_fwd[s].earliest_fit(e, g.ser_pooled[s]);
                t0 += slot - e;
                ok = false;
                break;
              }
              cur = e + g.ser_pooled[s] + g.latency[s];
            } else {
              cur = e;
            }
          }
        }
        if (ok) break;
      }
      // Commit the chain.
      TimeNs cur = t0;
      for (int s = 0; s < S; ++s) {
        TimeNs start = std::max(cur, st.gpu_free[s]);
        TimeNs e = start + g.fwd;
        out.tasks.push_back(
            {g.gpu[p][s], g.cell_id, p, TaskKind::Forward, m, s, start, e});
        st.gpu_free[s] = e;
        st.fd[s][m] = e;
        if (s + 1 < S) {
          if (g.wan[s]) {
            TimeNs occ_end = e + g.ser_pooled[s];
            cs.res_fwd[s].reserve(e, occ_end);
            st.arr[s + 1][m] = occ_end + g.latency[s];
            out.transfers.push_back({g.cell_id, p, m, s,
                                     Direction::ActivationFwd, g.bytes, e,
                                     occ_end, occ_end + g.latency[s], g.C});
            cur = st.arr[s + 1][m];
          } else {
            st.arr[s + 1][m] = e;
            cur = e;
          }
        }
      }
      cs.chain_start[p][m] = t0;
    }
  }

  // Drain phase, three passes.
  //
  // 1. Greedy exact-fit placement, one pair at a time: among every
  //    pipeline's next in-order pair at each stage whose gradient input has
  //    arrived, commit the one with the earliest exact-fit start (GPU free,
  //    gradient present, transfer slot free at pair end). Ties prefer deeper
  //    stages, then lower LocalDPRank, so drains keep unlocking downstream
  //    work. This pass fixes the drain's makespan.
  //
  // 2. Right-pack, stages from first to last: each pair slides right to
  //    consolidate idle into one window per stage, but only while nothing a
  //    successor reads moves — it may not touch the next pair on its GPU,
  //    its gradient must still reach the (already final) consumer pair on
  //    time, and its transfer must still fit on the link. The last pair of
  //    each stage never moves, so the pack is makespan-neutral.
  //
  // 3. Emission with the packed times.
  const TimeNs dur = g.pair_dur(recompute);
  std::vector<std::vector<int>> first_m(C, std::vector<int>(S, 0));
  std::vector<std::vector<int>> next_m(C, std::vector<int>(S, 0));
  int remaining = 0;
  for (int p = 0; p < C; ++p) {
    for (int s = 0; s < S; ++s) {
      first_m[p][s] = next_m[p][s] = cs.drained[p][s];
      remaining += M - next_m[p][s];
    }
  }
  while (remaining > 0) {
    int bp = -1, bs = -1, bm = -1;
    TimeNs bt = 0;
    for (int s = S - 1; s >= 0; --s) {
      for (int p = 0; p < C; ++p) {
        PipelineState& st = cs.pipes[p];
        const int m = next_m[p][s];
        if (m >= M) continue;
        TimeNs ready;
        if (s == S - 1) {
          ready = st.fd[s][m];
        } else {
          if (!st.has_garr[s][m]) continue;
          ready = st.garr[s][m];
        }
        TimeNs t =
            atlas_pair_start(g, cs, s, std::max(ready, st.gpu_free[s]), dur);
        if (bp < 0 || t < bt) {
          bt = t;
          bp = p;
          bs = s;
          bm = m;
        }
      }
    }
    // The last stage's next pair is always ready, so a candidate exists.
    const bool wan_grad = bs > 0 && g.wan[bs - 1];
    PipelineState& st = cs.pipes[bp];
    if (wan_grad) {
      cs.res_bwd[bs - 1].reserve(bt + dur, bt + dur + g.ser_pooled[bs - 1]);
    }
    cs.pair_start[bp][bs][bm] = bt;
    st.gpu_free[bs] = bt + dur;
    if (bs > 0) {
      // Publish the greedy hand-off so the stage below can place its pairs;
      // packing only ever delays ends up to (never past) the consumer's
      // start, so these stay safe lower bounds.
      st.garr[bs - 1][bm] =
          wan_grad ? bt + dur + g.ser_pooled[bs - 1] + g.latency[bs - 1]
                   : bt + dur;
      st.has_garr[bs - 1][bm] = true;
    }
    ++next_m[bp][bs];
    --remaining;
  }
  for (int s = 0; s < S; ++s) {
    const bool wan_grad = s > 0 && g.wan[s - 1];
    const TimeNs ser = wan_grad ? g.ser_pooled[s - 1] : 0;
    for (int p = 0; p < C; ++p) {
      for (int m = M - 2; m >= first_m[p][s]; --m) {
        TimeNs cur = cs.pair_start[p][s][m];
        TimeNs end_max = cs.pair_start[p][s][m + 1];
        if (s > 0) {
          TimeNs consumer = cs.pair_start[p][s - 1][m];
          end_max = std::min(
              end_max, wan_grad ? consumer - g.latency[s - 1] - ser : consumer);
        }
        if (end_max <= cur + dur) continue;
        if (wan_grad) {
          cs.res_bwd[s - 1].unreserve(cur + dur, cur + dur + ser);
          TimeNs slot = cs.res_bwd[s - 1].latest_fit(cur + dur, end_max, ser);
          cs.pair_start[p][s][m] = slot - dur;
          cs.res_bwd[s - 1].reserve(slot, slot + ser);
        } else {
          cs.pair_start[p][s][m] = end_max - dur;
        }
      }
    }
  }
  for (int s = S - 1; s >= 0; --s) {
    for (int p = 0; p < C; ++p) {
      for (int m = first_m[p][s]; m < M; ++m) {
        atlas_commit_pair(out, g, cs, p, s, m, recompute,
                          cs.pair_start[p][s][m]);
      }
    }
  }
}

Schedule make_schedule(const std::string& policy, const ParallelismPlan& plan,
                       const ModelSpec& model, const ComputeProfile& profile,
                       const ClusterTopology& topo,
                       const SchedulerOptions& opts) {
  Schedule out;
  out.policy = policy;
  auto cells = build_geometry(plan, model, profile, topo, opts);
  for (const CellGeom& g : cells) {
    if (policy == "gpipe") {
      for (int p = 0; p < g.C; ++p) {
        flush_pipeline(out, g, p, /*reverse_drain=*/true,
                       /*barrier_last_fwd=*/true, opts.recompute);
      }
    } else if (policy == "varuna") {
      for (int p = 0; p < g.C; ++p) {
        flush_pipeline(out, g, p, /*reverse_drain=*/false,
                       /*barrier_last_fwd=*/false, opts.recompute);
      }
    } else if (policy == "1f1b") {
      for (int p = 0; p < g.C; ++p) onef1b_pipeline(out, g, p, opts.recompute);
    } else if (policy == "atlas") {
      int mem_limit = opts.mem_limit.value_or(g.S);
      if (mem_limit < 1) {
        throw ConfigError("mem_limit", "must be >= 1");
      }
      atlas_cell(out, g, opts.recompute, mem_limit);
    } else {
      throw ConfigError("policy", "unknown policy " + policy);
    }
  }
  finalize_schedule(out);
  return out;
}

}  // namespace

Schedule gpipe_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                        const ComputeProfile& profile,
                        const ClusterTopology& topo,
                        const SchedulerOptions& opts) {
  return make_schedule("gpipe", plan, model, profile, topo, opts);
}

Schedule onef1b_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                         const ComputeProfile& profile,
                         const ClusterTopology& topo,
                         const SchedulerOptions& opts) {
  return make_schedule("1f1b", plan, model, profile, topo, opts);
}

Schedule varuna_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                         const ComputeProfile& profile,
                         const ClusterTopology& topo,
                         const SchedulerOptions& opts) {
  return make_schedule("varuna", plan, model, profile, topo, opts);
}

Schedule atlas_schedule(const ParallelismPlan& plan, const ModelSpec& model,
                        const ComputeProfile& profile,
                        const ClusterTopology& topo,
                        const SchedulerOptions& opts) {
  return make_schedule("atlas", plan, model, profile, topo, opts);
}

Schedule schedule_for_policy(const std::string& policy,
                             const ParallelismPlan& plan,
                             const ModelSpec& model,
                             const ComputeProfile& profile,
                             const ClusterTopology& topo,
                             const SchedulerOptions& opts) {
  return make_schedule(policy, plan, model, profile, topo, opts);
}

Schedule append_allreduce(Schedule schedule, const ParallelismPlan& plan,
                          const ModelSpec& model, const ClusterTopology& topo) {
  const int D = static_cast<int>(plan.dp_cells.size());
  const int C = plan.pipelines_per_cell();
  const int N = D * C;
  const int S = plan.num_stages();

  // Last backward end per stage across all replicas.
  std::vector<TimeNs> stage_last(S, 0);
  for (const auto& t : schedule.tasks) {
    if (t.kind == TaskKind::Backward) {
      stage_last[t.stage] = std::max(stage_last[t.stage], t.end);
    }
  }

  for (int s = 0; s < S; ++s) {
    const Stage& st = plan.dp_cells[0].pipelines[0].stages[s];
    int layers = 0;
    for (int k = st.partition_begin; k < st.partition_end; ++k) {
      int begin = k * model.layers_per_partition;
      int end = std::min(begin + model.layers_per_partition, model.num_layers);
      layers += std::max(0, end - begin);
    }
    double params = model.effective_params_per_layer() * layers;
    double bw = topo.dc(st.dc_id).intra_bw;
    TimeNs dur = ms_to_ns(allreduce_time_ms(params, N, bw));
    TimeNs start = stage_last[s];
    for (int cell = 0; cell < D; ++cell) {
      for (int pipe = 0; pipe < C; ++pipe) {
        int gpu = plan.dp_cells[cell].pipelines[pipe].stages[s].gpu_ids.front();
        schedule.tasks.push_back({gpu, cell, pipe, TaskKind::AllReduce, 0, s,
                                  start, start + dur});
      }
    }
  }
  finalize_schedule(schedule);
  return schedule;
}

}  // namespace geopipe
