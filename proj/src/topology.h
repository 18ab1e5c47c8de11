#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "base.h"

namespace geopipe {

struct Datacenter {
  std::string id;
  int gpu_count = 0;
  double intra_bw = 0.0;          // bytes/ms
  double intra_latency_ms = 0.0;  // one-way
};

// Calibration point: single-TCP-connection bandwidth observed at a latency.
struct TcpPoint {
  double latency_ms = 0.0;
  double bw = 0.0;  // bytes/ms
};

struct WanProfile {
  // Symmetric one-way latencies keyed by unordered DC pair.
  std::map<std::pair<std::string, std::string>, double> latency_ms;
  double pair_bw_cap = 625000.0;  // bytes/ms (5 Gbps default)
  std::vector<TcpPoint> tcp_table;

  double latency_between(const std::string& a, const std::string& b) const;
};

struct ClusterTopology {
  std::vector<Datacenter> datacenters;
  WanProfile wan;

  const Datacenter& dc(const std::string& id) const;
  int total_gpus() const;
};

// Default single-TCP calibration table: (10 ms, 1220 Mbps), (20, 600),
// (30, 396), (40, 293), converted to bytes/ms.
std::vector<TcpPoint> default_tcp_table();

// Parses and validates a topology from the JSON config text. Throws
// ConfigError with a field path for every malformed input.
ClusterTopology load_topology(const std::string& config_text);

// Canonical serialization; load_topology(serialize_topology(t)) == t.
std::string serialize_topology(const ClusterTopology& topo);

bool operator==(const Datacenter& a, const Datacenter& b);
bool operator==(const WanProfile& a, const WanProfile& b);
bool operator==(const ClusterTopology& a, const ClusterTopology& b);

}  // namespace geopipe
