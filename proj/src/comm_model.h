#pragma once

#include <cstdint>

#include "topology.h"

namespace geopipe {

struct TensorShape {
  long long batch = 1;         // sequences per microbatch (B)
  long long seq_len = 1;       // tokens (L)
  long long hidden = 1;        // hidden size (H)
  int bytes_per_element = 2;   // fp16 default
};

// Single-TCP-connection bandwidth (bytes/ms) at a given one-way latency.
// At calibration points returns the table value; between points interpolates
// log-linearly; below the first point clamps; above the last point
// extrapolates proportionally to 1/latency anchored at the last point.
double single_tcp_bandwidth(double latency_ms, const WanProfile& profile);

// min(n_connections x single-connection bandwidth, pair cap).
double effective_pair_bandwidth(double latency_ms, int n_connections,
                                const WanProfile& profile);

// End-to-end delivery time for one message: latency + bytes / bw.
double transfer_time_ms(double bytes, double bw, double latency_ms);

// Ring all-reduce: 4 * P * (N-1) / (N * bw); zero when N == 1.
double allreduce_time_ms(double params, int ring_size, double bw);

// B * L * H * bytes_per_element.
long long activation_bytes(const TensorShape& shape);

}  // namespace geopipe
