#pragma once

// Fixture builders shared by the unit tests, the property suites, and the
// acceptance runner. Each function returns a fresh value so tests can
// mutate their copies freely.

#include <string>
#include <vector>

#include "comm_model.h"
#include "topology.h"
#include "workload.h"

namespace fixtures {

using namespace geopipe;

inline ClusterTopology make_topology(const std::vector<int>& gpu_counts,
                                     double latency_ms, double cap_gbps,
                                     double intra_gbps = 100.0) {
  ClusterTopology t;
  for (size_t i = 0; i < gpu_counts.size(); ++i) {
    Datacenter d;
    d.id = "dc" + std::to_string(i);
    d.gpu_count = gpu_counts[i];
    d.intra_bw = gbps_to_bytes_per_ms(intra_gbps);
    t.datacenters.push_back(d);
  }
  for (size_t i = 0; i < gpu_counts.size(); ++i)
    for (size_t j = i + 1; j < gpu_counts.size(); ++j)
      t.wan.latency_ms[{t.datacenters[i].id, t.datacenters[j].id}] =
          latency_ms;
  t.wan.pair_bw_cap = gbps_to_bytes_per_ms(cap_gbps);
  t.wan.tcp_table = default_tcp_table();
  return t;
}

// --- 12-GPU unit-slot fixture -----------------------------------------------
// One cell of two 6-stage pipelines over three DCs (two stages per DC),
// 1 ms forward/backward/recompute slots, 1.25 MB activations, zero-latency
// WAN capped at 5 Gbps per pipeline link: cross-DC serialization is 2 ms
// per transfer spatially and 1 ms under two-way pooling.

inline ClusterTopology unit12_topology() {
  return make_topology({4, 4, 4}, 0.0, 5.0);
}

inline ModelSpec unit12_model(int num_microbatches = 4) {
  ModelSpec m;
  m.num_layers = 6;
  m.hidden = 1000;
  m.seq_len = 625;
  m.microbatch = 1;
  m.num_microbatches = num_microbatches;
  m.bytes_per_element = 2;
  m.layers_per_partition = 1;
  return m;
}

inline ComputeProfile unit_profile() {
  return ComputeProfile::explicit_durations(1.0, 1.0, 1.0);
}

inline std::vector<std::string> dc012() { return {"dc0", "dc1", "dc2"}; }

// --- Five-DC capacity fixture ------------------------------------------------
// 5 x 600 GPUs, 20 ms WAN, 5 Gbps pair cap; 60-layer model, 4608-token
// sequences (56.6 MB activations), five microbatches, 10/20/10 ms compute.
// Used for the throughput-scaling and policy-improvement sweeps.

inline ClusterTopology five_dc_topology(int num_dcs = 5) {
  return make_topology(std::vector<int>(num_dcs, 600), 20.0, 5.0);
}

inline ModelSpec five_dc_model() {
  ModelSpec m;
  m.num_layers = 60;
  m.hidden = 6144;
  m.seq_len = 4608;
  m.microbatch = 1;
  m.num_microbatches = 5;
  m.bytes_per_element = 2;
  m.layers_per_partition = 1;
  return m;
}

inline ComputeProfile five_dc_profile() {
  return ComputeProfile::explicit_durations(10.0, 20.0, 10.0);
}

// --- Two-DC growth sweep ------------------------------------------------
// dc0 fixed at 600 GPUs, dc1 grows from 0 to 600; 40 ms WAN. The model is
// the capacity fixture with shorter (2048-token) sequences and M=6.

inline ClusterTopology growth_topology(int dc1_gpus) {
  if (dc1_gpus <= 0) return make_topology({600}, 40.0, 5.0);
  return make_topology({600, dc1_gpus}, 40.0, 5.0);
}

inline ModelSpec growth_model() {
  ModelSpec m = five_dc_model();
  m.seq_len = 2048;
  m.num_microbatches = 6;
  return m;
}

// --- 12-GPU WAN-heavy fixture ------------------------------------------------
// Three DCs of 6/3/3 GPUs at 40 ms, one cell of three 4-stage pipelines
// (stage layout dc0,dc0,dc1,dc2 => two WAN crossings), 96 MiB activations,
// 15/30/15 ms compute, M=4. Exercises single- vs multi-connection WAN and
// the policy gap under heavy communication.

inline ClusterTopology wan12_topology() {
  return make_topology({6, 3, 3}, 40.0, 5.0);
}

inline ModelSpec wan12_model() {
  ModelSpec m;
  m.num_layers = 4;
  m.hidden = 8192;
  m.seq_len = 6144;
  m.microbatch = 1;
  m.num_microbatches = 4;
  m.bytes_per_element = 2;
  m.layers_per_partition = 1;
  return m;
}

inline ComputeProfile wan12_profile() {
  return ComputeProfile::explicit_durations(15.0, 30.0, 15.0);
}

// --- Segmented tiny topologies ---------------------------------------------
// Builds a topology for a single cell of `pipelines` pipelines whose stage s
// lives in DC dc_of_stage[s]; the pair cap is sized so one pooled transfer
// of the unit12 activation serializes in exactly `pooled_ser_ms`.

inline ClusterTopology segment_topology(const std::vector<int>& dc_of_stage,
                                        int pipelines, double pooled_ser_ms) {
  int num_dcs = 0;
  for (int d : dc_of_stage) num_dcs = std::max(num_dcs, d + 1);
  std::vector<int> counts(num_dcs, 0);
  for (int d : dc_of_stage) counts[d] += pipelines;
  long long act = activation_bytes(unit12_model().activation_shape());
  double pooled_bw = static_cast<double>(act) / pooled_ser_ms;
  ClusterTopology t = make_topology(counts, 0.0, 1.0);
  t.wan.pair_bw_cap = pooled_bw / pipelines;
  return t;
}

inline ModelSpec segment_model(int num_stages, int num_microbatches) {
  ModelSpec m = unit12_model(num_microbatches);
  m.num_layers = num_stages;
  return m;
}

}  // namespace fixtures
