#include "metrics.h"

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

namespace geopipe {

namespace {

// Fraction of [0, horizon) covered by the union of the given intervals.
double union_fraction(std::vector<Interval>& ivs, TimeNs horizon) {
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) {
    return a.start < b.start;
  });
  TimeNs covered = 0;
  TimeNs cursor = 0;
  for (const Interval& iv : ivs) {
    TimeNs lo = std::max(std::max(iv.start, cursor), TimeNs{0});
    TimeNs hi = std::min(iv.end, horizon);
    if (hi > lo) covered += hi - lo;
    cursor = std::max(cursor, hi);
  }
  return horizon > 0 ? static_cast<double>(covered) /
                           static_cast<double>(horizon)
                     : 0.0;
}

}  // namespace

MetricsReport report(const Timeline& timeline, const Timeline* reference,
                     std::optional<TimeNs> horizon) {
  MetricsReport r;
  r.iteration_ms = timeline.makespan_ms();
  r.throughput_iters_per_s =
      r.iteration_ms > 0 ? 1000.0 / r.iteration_ms : 0.0;

  const TimeNs hor = horizon.value_or(timeline.makespan);
  if (hor > 0) {
    std::map<int, TimeNs> busy;
    for (const ScheduledTask& t : timeline.tasks) {
      TimeNs lo = std::max<TimeNs>(t.start, 0);
      TimeNs hi = std::min(t.end, hor);
      busy[t.gpu_id] += std::max<TimeNs>(0, hi - lo);
    }
    double sum = 0.0;
    for (const auto& [gpu, ns] : busy) {
      double u = static_cast<double>(ns) / static_cast<double>(hor);
      r.per_gpu_utilization[gpu] = u;
      sum += u;
    }
    if (!busy.empty()) r.mean_utilization = sum / busy.size();
    r.bubble_fraction = 1.0 - r.mean_utilization;

    // One interval list per (cell, boundary, direction) link.
    std::map<std::tuple<int, int, int>, std::vector<Interval>> links;
    for (const ScheduledTransfer& x : timeline.transfers) {
      links[{x.cell_id, x.boundary, static_cast<int>(x.direction)}].push_back(
          {x.start, x.end});
    }
    double frac[2] = {0.0, 0.0};
    int count[2] = {0, 0};
    for (auto& [key, ivs] : links) {
      int dir = std::get<2>(key);
      frac[dir] += union_fraction(ivs, hor);
      count[dir] += 1;
    }
    if (count[0] > 0) r.wan_busy_fraction_fwd = frac[0] / count[0];
    if (count[1] > 0) r.wan_busy_fraction_bwd = frac[1] / count[1];
  }

  if (reference != nullptr) {
    if (reference->makespan <= 0) {
      throw ConfigError("reference", "reference timeline has zero makespan");
    }
    r.slowdown_vs_reference = static_cast<double>(timeline.makespan) /
                              static_cast<double>(reference->makespan);
  }
  return r;
}

}  // namespace geopipe
