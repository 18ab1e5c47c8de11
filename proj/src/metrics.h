#pragma once

#include <map>
#include <optional>

#include "schedule.h"

namespace geopipe {

// Headline quantities derived from one realized timeline. Utilization uses
// the iteration window [0, horizon) with horizon defaulting to the makespan;
// per GPU, utilization + bubble fraction = 1 over that window.
struct MetricsReport {
  double iteration_ms = 0.0;
  double throughput_iters_per_s = 0.0;
  std::map<int, double> per_gpu_utilization;
  double mean_utilization = 0.0;
  double bubble_fraction = 1.0;
  // Present only when a reference timeline was supplied.
  std::optional<double> slowdown_vs_reference;
  // Mean over cross-DC boundaries of the fraction of the horizon their link
  // is occupied, split by traffic direction (the directions never compete).
  double wan_busy_fraction_fwd = 0.0;
  double wan_busy_fraction_bwd = 0.0;
};

// Pure aggregation over the timeline; deterministic. `reference`, when
// given, supplies the denominator-free slowdown = makespan / reference
// makespan. `horizon` defaults to the timeline's makespan.
MetricsReport report(const Timeline& timeline,
                     const Timeline* reference = nullptr,
                     std::optional<TimeNs> horizon = {});

}  // namespace geopipe
