#pragma once

#include <string>
#include <vector>

#include "base.h"

namespace geopipe {

enum class TaskKind { Forward, Backward, Recompute, AllReduce, Prefill };

enum class Direction { ActivationFwd, GradientBwd };

struct ScheduledTask {
  int gpu_id = 0;
  int cell_id = 0;
  int pipeline_id = 0;  // LocalDPRank within the cell
  TaskKind kind = TaskKind::Forward;
  int microbatch = 0;
  int stage = 0;
  TimeNs start = 0;
  TimeNs end = 0;
};

// A WAN transfer. [start, end) is the link-occupancy (serialization)
// interval used for contention; `arrival` = end + one-way latency is when the
// consumer may start, so arrival - start equals the end-to-end transfer time.
struct ScheduledTransfer {
  int cell_id = 0;
  int pipeline_id = 0;
  int microbatch = 0;
  int boundary = 0;  // between stage `boundary` and `boundary + 1`
  Direction direction = Direction::ActivationFwd;
  long long bytes = 0;
  TimeNs start = 0;
  TimeNs end = 0;
  TimeNs arrival = 0;
  int pooled_pipelines = 1;
};

struct Schedule {
  std::vector<ScheduledTask> tasks;
  std::vector<ScheduledTransfer> transfers;
  TimeNs makespan = 0;
  std::string policy;

  double makespan_ms() const { return ns_to_ms(makespan); }
};

// A Timeline is a Schedule whose times were realized by the event engine.
using Timeline = Schedule;

const char* task_kind_name(TaskKind kind);
const char* direction_name(Direction dir);

// Canonical ordering for tasks and transfers plus makespan recomputation;
// two equal schedules serialize byte-identically after this.
void finalize_schedule(Schedule& schedule);

}  // namespace geopipe
