#include "schedule.h"

#include <algorithm>
#include <tuple>

namespace geopipe {

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::Forward: return "forward";
    case TaskKind::Backward: return "backward";
    case TaskKind::Recompute: return "recompute";
    case TaskKind::AllReduce: return "allreduce";
    case TaskKind::Prefill: return "prefill";
  }
  return "unknown";
}

const char* direction_name(Direction dir) {
  return dir == Direction::ActivationFwd ? "activation_fwd" : "gradient_bwd";
}

void finalize_schedule(Schedule& schedule) {
  auto task_order = [](const ScheduledTask& a, const ScheduledTask& b) {
    return std::tie(a.cell_id, a.pipeline_id, a.stage, a.start, a.end,
                    a.microbatch) < std::tie(b.cell_id, b.pipeline_id, b.stage,
                                             b.start, b.end, b.microbatch);
  };
  auto transfer_order = [](const ScheduledTransfer& a,
                           const ScheduledTransfer& b) {
    int ad = static_cast<int>(a.direction);
    int bd = static_cast<int>(b.direction);
    return std::tie(a.cell_id, a.boundary, ad, a.start, a.pipeline_id,
                    a.microbatch) < std::tie(b.cell_id, b.boundary, bd,
                                             b.start, b.pipeline_id,
                                             b.microbatch);
  };
  std::sort(schedule.tasks.begin(), schedule.tasks.end(), task_order);
  std::sort(schedule.transfers.begin(), schedule.transfers.end(),
            transfer_order);
  // Every transfer is consumed by a later task, so task ends bound the span.
  TimeNs makespan = 0;
  for (const auto& t : schedule.tasks) makespan = std::max(makespan, t.end);
  schedule.makespan = makespan;
}

}  // namespace geopipe
