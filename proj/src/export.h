#pragma once

#include <string>
#include <vector>

#include "bubbletea.h"
#include "dc_select.h"
#include "metrics.h"
#include "schedule.h"

namespace geopipe {

// All exporters return byte-deterministic text for identical inputs: times
// are printed with fixed six-decimal precision and rows follow the input
// order (schedules are canonically sorted when finalized).

// Chrome trace-event JSON ("X" complete events, microsecond timestamps);
// pid = DP cell, tid = GPU id for tasks and a per-link id for transfers.
std::string chrome_trace_json(const Timeline& timeline);

// One row per task and transfer with a leading record-type column.
std::string schedule_csv(const Timeline& timeline);

// Two-column metric,value rows followed by per-GPU utilization rows.
std::string metrics_csv(const MetricsReport& report);

// One row per candidate replica count D.
std::string selection_csv(const SelectionReport& report);

// Human-readable fixed-width view of the same table.
std::string selection_table(const SelectionReport& report);

// Flattened scenario sweep; rows ordered by scenario then D.
std::string whatif_csv(const std::vector<WhatIfRow>& rows);

// id,accepted,pipeline,start_ms,ttft_overhead_ms,reason — one row per
// request, ordered by request id.
std::string placements_csv(const PlacementResult& result);

// Before/after occupancy summary for a prefill-filling run.
std::string bubbletea_metrics_csv(double util_before, double util_after,
                                  size_t requests, size_t accepted,
                                  size_t rejected);

// Writes content to path, replacing any previous file.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace geopipe
