#include "engine.h"

#include <algorithm>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>
#include <vector>

namespace geopipe {

namespace {

enum class EventKind { TaskReady = 0, TaskDone = 1, TransferDone = 2 };

struct Event {
  TimeNs time = 0;
  EventKind kind = EventKind::TaskReady;
  int cell = 0;
  int pipeline = 0;
  int microbatch = 0;
  int stage = 0;
  int index = 0;  // task or transfer index
  bool operator>(const Event& other) const {
    return std::tie(time, kind, cell, pipeline, microbatch, stage, index) >
           std::tie(other.time, other.kind, other.cell, other.pipeline,
                    other.microbatch, other.stage, other.index);
  }
};

// Dependency edge endpoints: a task waits on tasks (at their end time) and
// on transfers (at their arrival time).
struct TaskNode {
  int unmet = 0;
  TimeNs dep_floor = 0;
  bool dispatched = false;
  bool done = false;
  TimeNs start = 0;
  TimeNs end = 0;
  std::vector<int> out_tasks;      // tasks unblocked by this task's end
  std::vector<int> out_transfers;  // transfers produced by this task
  // Deadlock reporting: the unresolved inputs of this task.
  std::vector<int> in_tasks;
  std::vector<int> in_transfers;
};

struct TransferNode {
  int producer = -1;
  bool producer_done = false;
  TimeNs producer_end = 0;
  bool dispatched = false;
  bool done = false;
  TimeNs start = 0;
  TimeNs end = 0;
  TimeNs arrival = 0;
  int consumer = -1;
  int link = 0;
  int link_pos = 0;
};

struct LinkState {
  std::vector<int> fifo;  // transfer indices in dispatch order
  int head = 0;
  TimeNs free_at = 0;
};

struct GpuState {
  std::vector<int> program;  // task indices in dispatch order
  int head = 0;
  TimeNs free_at = 0;
};

std::string task_label(const ScheduledTask& t) {
  std::ostringstream os;
  os << task_kind_name(t.kind) << "(cell=" << t.cell_id
     << ", pipeline=" << t.pipeline_id << ", stage=" << t.stage
     << ", microbatch=" << t.microbatch << ")";
  return os.str();
}

class Replayer {
 public:
  Replayer(const Schedule& in, bool hold_reserved) : in_(in) {
    hold_reserved_ = hold_reserved;
    build();
  }

  Timeline execute() {
    for (auto& [gpu, st] : gpus_) dispatch_next_task(st);
    for (auto& link : links_) dispatch_link_head(link);
    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      switch (ev.kind) {
        case EventKind::TaskReady:
          on_task_ready(ev.index);
          break;
        case EventKind::TaskDone:
          on_task_done(ev.index);
          break;
        case EventKind::TransferDone:
          on_transfer_done(ev.index);
          break;
      }
    }
    size_t done = 0;
    for (const auto& n : tasks_) done += n.done ? 1 : 0;
    if (done != tasks_.size()) throw DeadlockError(deadlock_report());

    Timeline out;
    out.policy = in_.policy;
    out.tasks = in_.tasks;
    out.transfers = in_.transfers;
    for (size_t i = 0; i < tasks_.size(); ++i) {
      out.tasks[i].start = tasks_[i].start;
      out.tasks[i].end = tasks_[i].end;
    }
    for (size_t i = 0; i < xfers_.size(); ++i) {
      out.transfers[i].start = xfers_[i].start;
      out.transfers[i].end = xfers_[i].end;
      out.transfers[i].arrival = xfers_[i].arrival;
    }
    finalize_schedule(out);
    return out;
  }

 private:
  using TaskKey = std::tuple<int, int, int, int, int>;  // cell,pipe,stage,m,kind
  using XferKey = std::tuple<int, int, int, int, int>;  // cell,pipe,bnd,m,dir

  void build() {
    const auto& ts = in_.tasks;
    const auto& xs = in_.transfers;
    tasks_.assign(ts.size(), {});
    xfers_.assign(xs.size(), {});

    std::map<TaskKey, int> task_at;
    std::map<XferKey, int> xfer_at;
    std::map<std::pair<int, int>, int> stage_count;  // (cell,pipe) -> S
    for (size_t i = 0; i < ts.size(); ++i) {
      const auto& t = ts[i];
      task_at[{t.cell_id, t.pipeline_id, t.stage, t.microbatch,
               static_cast<int>(t.kind)}] = static_cast<int>(i);
      if (t.kind != TaskKind::AllReduce && t.kind != TaskKind::Prefill) {
        auto& S = stage_count[{t.cell_id, t.pipeline_id}];
        S = std::max(S, t.stage + 1);
      }
    }
    for (size_t i = 0; i < xs.size(); ++i) {
      const auto& x = xs[i];
      xfer_at[{x.cell_id, x.pipeline_id, x.boundary, x.microbatch,
               static_cast<int>(x.direction)}] = static_cast<int>(i);
    }

    // GPU program order: stable sort by realized-intent times.
    {
      std::vector<int> order(ts.size());
      for (size_t i = 0; i < ts.size(); ++i) order[i] = static_cast<int>(i);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& x = ts[a];
        const auto& y = ts[b];
        int xk = static_cast<int>(x.kind), yk = static_cast<int>(y.kind);
        return std::tie(x.start, x.end, xk, x.microbatch, x.stage) <
               std::tie(y.start, y.end, yk, y.microbatch, y.stage);
      });
      for (int i : order) gpus_[ts[i].gpu_id].program.push_back(i);
      for (auto& [gpu, st] : gpus_) {
        for (size_t pos = 0; pos < st.program.size(); ++pos)
          program_pos_[st.program[pos]] = static_cast<int>(pos);
      }
    }

    auto add_task_dep = [&](int from, int to) {
      tasks_[to].unmet += 1;
      tasks_[to].in_tasks.push_back(from);
      tasks_[from].out_tasks.push_back(to);
    };
    auto add_xfer_dep = [&](int xfer, int to) {
      tasks_[to].unmet += 1;
      tasks_[to].in_transfers.push_back(xfer);
      xfers_[xfer].consumer = to;
    };

    // Dataflow edges.
    std::map<int, std::vector<int>> backwards_by_stage;  // for AllReduce
    for (size_t i = 0; i < ts.size(); ++i) {
      const auto& t = ts[i];
      int idx = static_cast<int>(i);
      const int S = stage_count.count({t.cell_id, t.pipeline_id})
                        ? stage_count[{t.cell_id, t.pipeline_id}]
                        : 0;
      auto find_task = [&](int stage, int kind) {
        auto it = task_at.find(
            {t.cell_id, t.pipeline_id, stage, t.microbatch, kind});
        return it == task_at.end() ? -1 : it->second;
      };
      auto find_xfer = [&](int boundary, Direction dir) {
        auto it = xfer_at.find({t.cell_id, t.pipeline_id, boundary,
                                t.microbatch, static_cast<int>(dir)});
        return it == xfer_at.end() ? -1 : it->second;
      };
      switch (t.kind) {
        case TaskKind::Forward: {
          if (t.stage > 0) {
            int x = find_xfer(t.stage - 1, Direction::ActivationFwd);
            if (x >= 0) {
              add_xfer_dep(x, idx);
            } else {
              int prev = find_task(t.stage - 1,
                                   static_cast<int>(TaskKind::Forward));
              if (prev >= 0) add_task_dep(prev, idx);
            }
          }
          break;
        }
        case TaskKind::Recompute:
        case TaskKind::Backward: {
          // The pair gate: gradient from stage+1 (or own forward at the top
          // stage) feeds the recompute when present, else the backward.
          if (t.kind == TaskKind::Backward) {
            int rec = find_task(t.stage, static_cast<int>(TaskKind::Recompute));
            if (rec >= 0) {
              add_task_dep(rec, idx);
              break;
            }
          }
          int fwd = find_task(t.stage, static_cast<int>(TaskKind::Forward));
          if (fwd >= 0) add_task_dep(fwd, idx);
          if (t.stage < S - 1) {
            int x = find_xfer(t.stage, Direction::GradientBwd);
            if (x >= 0) {
              add_xfer_dep(x, idx);
            } else {
              int up = find_task(t.stage + 1,
                                 static_cast<int>(TaskKind::Backward));
              if (up >= 0) add_task_dep(up, idx);
            }
          }
          break;
        }
        case TaskKind::AllReduce:
          break;  // handled below, needs all backwards indexed first
        case TaskKind::Prefill:
          break;  // placement: program order + reserved start only
      }
      if (t.kind == TaskKind::Backward)
        backwards_by_stage[t.stage].push_back(idx);
    }
    for (size_t i = 0; i < ts.size(); ++i) {
      if (ts[i].kind != TaskKind::AllReduce) continue;
      for (int b : backwards_by_stage[ts[i].stage])
        add_task_dep(b, static_cast<int>(i));
    }

    // Transfer producers and link FIFOs.
    {
      std::vector<int> order(xs.size());
      for (size_t i = 0; i < xs.size(); ++i) order[i] = static_cast<int>(i);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& x = xs[a];
        const auto& y = xs[b];
        return std::tie(x.start, x.end, x.pipeline_id, x.microbatch) <
               std::tie(y.start, y.end, y.pipeline_id, y.microbatch);
      });
      for (int i : order) {
        const auto& x = xs[i];
        // Pooled transfers share one link per (cell, boundary, direction);
        // spatial transfers key by pipeline as well.
        int pipe_key = x.pooled_pipelines > 1 ? -1 : x.pipeline_id;
        auto key = std::make_tuple(x.cell_id, pipe_key, x.boundary,
                                   static_cast<int>(x.direction));
        auto [it, inserted] = link_index_.try_emplace(key, (int)links_.size());
        if (inserted) links_.emplace_back();
        LinkState& link = links_[it->second];
        xfers_[i].link = it->second;
        xfers_[i].link_pos = static_cast<int>(link.fifo.size());
        link.fifo.push_back(i);

        int producer_stage = x.direction == Direction::ActivationFwd
                                 ? x.boundary
                                 : x.boundary + 1;
        TaskKind producer_kind = x.direction == Direction::ActivationFwd
                                     ? TaskKind::Forward
                                     : TaskKind::Backward;
        auto pit = task_at.find({x.cell_id, x.pipeline_id, producer_stage,
                                 x.microbatch,
                                 static_cast<int>(producer_kind)});
        if (pit != task_at.end()) {
          xfers_[i].producer = pit->second;
          tasks_[pit->second].out_transfers.push_back(i);
        } else {
          xfers_[i].producer_done = true;  // dangling: ready at time 0
        }
      }
    }
  }

  void push_task_event(EventKind kind, TimeNs time, int idx) {
    const auto& t = in_.tasks[idx];
    events_.push(Event{time, kind, t.cell_id, t.pipeline_id, t.microbatch,
                       t.stage, idx});
  }

  void dispatch_next_task(GpuState& gpu) {
    if (gpu.head >= static_cast<int>(gpu.program.size())) return;
    int idx = gpu.program[gpu.head];
    TaskNode& n = tasks_[idx];
    if (n.dispatched || n.unmet > 0) return;
    const auto& t = in_.tasks[idx];
    TimeNs start = std::max(n.dep_floor, gpu.free_at);
    if (hold_reserved_ || t.kind == TaskKind::Prefill)
      start = std::max(start, t.start);
    n.dispatched = true;
    n.start = start;
    n.end = start + (t.end - t.start);
    push_task_event(EventKind::TaskReady, start, idx);
    push_task_event(EventKind::TaskDone, n.end, idx);
  }

  void dispatch_link_head(LinkState& link) {
    if (link.head >= static_cast<int>(link.fifo.size())) return;
    int idx = link.fifo[link.head];
    TransferNode& x = xfers_[idx];
    if (x.dispatched || !x.producer_done) return;
    const auto& sx = in_.transfers[idx];
    TimeNs start = std::max(x.producer_end, link.free_at);
    if (hold_reserved_) start = std::max(start, sx.start);
    x.dispatched = true;
    x.start = start;
    x.end = start + (sx.end - sx.start);
    x.arrival = x.end + (sx.arrival - sx.end);
    events_.push(Event{x.end, EventKind::TransferDone, sx.cell_id,
                       sx.pipeline_id, sx.microbatch, sx.boundary, idx});
  }

  void resolve_task_input(int idx, TimeNs at) {
    TaskNode& n = tasks_[idx];
    n.dep_floor = std::max(n.dep_floor, at);
    n.unmet -= 1;
    if (n.unmet == 0) {
      GpuState& gpu = gpus_[in_.tasks[idx].gpu_id];
      if (gpu.head < static_cast<int>(gpu.program.size()) &&
          gpu.program[gpu.head] == idx) {
        dispatch_next_task(gpu);
      }
    }
  }

  void on_task_ready(int) { /* informational; ordering anchor for ties */ }

  void on_task_done(int idx) {
    TaskNode& n = tasks_[idx];
    n.done = true;
    GpuState& gpu = gpus_[in_.tasks[idx].gpu_id];
    gpu.free_at = std::max(gpu.free_at, n.end);
    gpu.head += 1;
    dispatch_next_task(gpu);
    for (int t : n.out_tasks) resolve_task_input(t, n.end);
    for (int xi : n.out_transfers) {
      TransferNode& x = xfers_[xi];
      x.producer_done = true;
      x.producer_end = n.end;
      if (x.link_pos == links_[x.link].head) dispatch_link_head(links_[x.link]);
    }
  }

  void on_transfer_done(int idx) {
    TransferNode& x = xfers_[idx];
    x.done = true;
    LinkState& link = links_[x.link];
    link.free_at = std::max(link.free_at, x.end);
    link.head += 1;
    dispatch_link_head(link);
    if (x.consumer >= 0) resolve_task_input(x.consumer, x.arrival);
  }

  std::string deadlock_report() const {
    // Walk the waits-for graph starting at any blocked task until a node
    // repeats, then print the cycle (or the chain if it dead-ends).
    int start = -1;
    for (size_t i = 0; i < tasks_.size(); ++i) {
      if (!tasks_[i].done) {
        start = static_cast<int>(i);
        break;
      }
    }
    std::vector<int> chain;
    std::map<int, int> seen;  // task -> position in chain
    int cur = start;
    while (cur >= 0 && !seen.count(cur)) {
      seen[cur] = static_cast<int>(chain.size());
      chain.push_back(cur);
      cur = blocking_task(cur);
    }
    std::ostringstream os;
    os << "deadlock: no runnable event while tasks remain; blocked cycle: ";
    size_t from = cur >= 0 ? static_cast<size_t>(seen[cur]) : 0;
    for (size_t i = from; i < chain.size(); ++i) {
      if (i > from) os << " -> ";
      os << task_label(in_.tasks[chain[i]]);
    }
    if (cur >= 0) os << " -> " << task_label(in_.tasks[cur]);
    return os.str();
  }

  // The task another task is waiting on: an unfinished dependency, the
  // producer of an unfinished input transfer, a transfer queued ahead on the
  // same link, or the GPU program predecessor.
  int blocking_task(int idx) const {
    const TaskNode& n = tasks_[idx];
    for (int t : n.in_tasks)
      if (!tasks_[t].done) return t;
    for (int xi : n.in_transfers) {
      const TransferNode& x = xfers_[xi];
      if (x.done) continue;
      if (!x.producer_done && x.producer >= 0 && !tasks_[x.producer].done)
        return x.producer;
      const LinkState& link = links_[x.link];
      for (int pos = link.head; pos < x.link_pos; ++pos) {
        const TransferNode& ahead = xfers_[link.fifo[pos]];
        if (!ahead.done && ahead.producer >= 0 && !tasks_[ahead.producer].done)
          return ahead.producer;
      }
    }
    auto it = program_pos_.find(idx);
    if (it != program_pos_.end() && it->second > 0) {
      const auto& program = gpus_.at(in_.tasks[idx].gpu_id).program;
      int prev = program[it->second - 1];
      if (!tasks_[prev].done) return prev;
    }
    return -1;
  }

  const Schedule& in_;
  bool hold_reserved_ = false;
  std::vector<TaskNode> tasks_;
  std::vector<TransferNode> xfers_;
  std::map<int, GpuState> gpus_;
  std::map<int, int> program_pos_;
  std::map<std::tuple<int, int, int, int>, int> link_index_;
  std::vector<LinkState> links_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> events_;
};

}  // namespace

Timeline replay_schedule(const Schedule& schedule, bool hold_reserved_starts) {
  Replayer r(schedule, hold_reserved_starts);
  return r.execute();
}

Timeline run(const ParallelismPlan& plan, const std::string& policy,
             const ModelSpec& model, const ComputeProfile& profile,
             const ClusterTopology& topo, const SchedulerOptions& opts,
             bool with_allreduce) {
  Schedule sched = schedule_for_policy(policy, plan, model, profile, topo,
                                       opts);
  if (with_allreduce) sched = append_allreduce(sched, plan, model, topo);
  return replay_schedule(sched, policy == "atlas");
}

double iteration_time_ms(const Timeline& timeline) {
  return timeline.makespan_ms();
}

double slowdown(const Timeline& timeline, const Timeline& baseline) {
  if (baseline.makespan <= 0) {
    throw ConfigError("baseline", "baseline timeline has zero makespan");
  }
  return static_cast<double>(timeline.makespan) /
         static_cast<double>(baseline.makespan);
}

}  // namespace geopipe
