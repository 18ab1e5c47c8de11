#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace geopipe {

// All scheduling arithmetic uses integer nanoseconds so that event ordering
// and tie-breaking are exact; milliseconds are the user-facing view.
using TimeNs = std::int64_t;

inline TimeNs ms_to_ns(double ms) {
  return static_cast<TimeNs>(std::llround(ms * 1e6));
}

inline double ns_to_ms(TimeNs ns) { return static_cast<double>(ns) / 1e6; }

// Unit conversions: canonical units are bytes and milliseconds.
// 1 Gbps = 125,000 bytes/ms; 1 Mbps = 125 bytes/ms.
inline double gbps_to_bytes_per_ms(double gbps) { return gbps * 125000.0; }
inline double mbps_to_bytes_per_ms(double mbps) { return mbps * 125.0; }

// Structured validation / runtime failure with a field path for config errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field_path, const std::string& message)
      : std::runtime_error(field_path.empty() ? message
                                              : field_path + ": " + message),
        field_path_(std::move(field_path)) {}
  const std::string& field_path() const { return field_path_; }

 private:
  std::string field_path_;
};

class InsufficientGpus : public std::runtime_error {
 public:
  explicit InsufficientGpus(const std::string& message)
      : std::runtime_error(message) {}
};

class DeadlockError : public std::runtime_error {
 public:
  explicit DeadlockError(const std::string& message)
      : std::runtime_error(message) {}
};

// Half-open interval [start, end) in integer nanoseconds.
struct Interval {
  TimeNs start = 0;
  TimeNs end = 0;
  bool overlaps(const Interval& other) const {
    return start < other.end && other.start < end;
  }
  TimeNs length() const { return end - start; }
};

// Sorted, non-overlapping reservation list for an exclusive resource.
// Supports FIFO appends and exact-fit queries used by pooled-link placement.
class ReservationList {
 public:
  bool free_at(TimeNs start, TimeNs end) const {
    if (start >= end) return true;
    for (const Interval& iv : intervals_) {
      if (iv.start >= end) break;
      if (iv.overlaps({start, end})) return false;
    }
    return true;
  }

  // Earliest t >= lo such that [t, t+len) is free.
  TimeNs earliest_fit(TimeNs lo, TimeNs len) const {
    if (len <= 0) return lo;
    TimeNs t = lo;
    for (const Interval& iv : intervals_) {
      if (iv.end <= t) continue;
      if (iv.start >= t + len) break;
      t = iv.end;
    }
    return t;
  }

  // Latest t <= hi with t >= lo such that [t, t+len) is free; returns lo-1
  // when no such placement exists.
  TimeNs latest_fit(TimeNs lo, TimeNs hi, TimeNs len) const {
    if (hi < lo) return lo - 1;
    if (len <= 0) return hi;
    TimeNs t = hi;
    for (auto it = intervals_.rbegin(); it != intervals_.rend(); ++it) {
      if (it->start >= t + len) continue;
      if (it->end <= t) break;
      t = it->start - len;
      if (t < lo) return lo - 1;
    }
    return t >= lo ? t : lo - 1;
  }

  void reserve(TimeNs start, TimeNs end) {
    if (start >= end) return;
    auto it = intervals_.begin();
    while (it != intervals_.end() && it->start < start) ++it;
    intervals_.insert(it, Interval{start, end});
  }

  // Removes a previously reserved interval (exact match required).
  void unreserve(TimeNs start, TimeNs end) {
    if (start >= end) return;
    for (auto it = intervals_.begin(); it != intervals_.end(); ++it) {
      if (it->start == start && it->end == end) {
        intervals_.erase(it);
        return;
      }
    }
    throw std::logic_error("unreserve: interval not found");
  }

  const std::vector<Interval>& intervals() const { return intervals_; }

 private:
  std::vector<Interval> intervals_;
};

}  // namespace geopipe
