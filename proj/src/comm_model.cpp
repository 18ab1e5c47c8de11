#include "comm_model.h"

#include <algorithm>
#include <cmath>

namespace geopipe {

double single_tcp_bandwidth(double latency_ms, const WanProfile& profile) {
  const auto& table = profile.tcp_table;
  if (latency_ms <= table.front().latency_ms) return table.front().bw;
  const TcpPoint& last = table.back();
  if (latency_ms >= last.latency_ms) {
    return last.bw * last.latency_ms / latency_ms;
  }
  for (size_t i = 1; i < table.size(); ++i) {
    const TcpPoint& lo = table[i - 1];
    const TcpPoint& hi = table[i];
    if (latency_ms > hi.latency_ms) continue;
    if (latency_ms == hi.latency_ms) return hi.bw;
    double f = (std::log(latency_ms) - std::log(lo.latency_ms)) /
               (std::log(hi.latency_ms) - std::log(lo.latency_ms));
    return std::exp(std::log(lo.bw) + f * (std::log(hi.bw) - std::log(lo.bw)));
  }
  return last.bw;
}

double effective_pair_bandwidth(double latency_ms, int n_connections,
                                const WanProfile& profile) {
  double single = single_tcp_bandwidth(latency_ms, profile);
  return std::min(n_connections * single, profile.pair_bw_cap);
}

double transfer_time_ms(double bytes, double bw, double latency_ms) {
  if (bw <= 0) throw std::invalid_argument("bandwidth must be positive");
  return latency_ms + bytes / bw;
}

double allreduce_time_ms(double params, int ring_size, double bw) {
  if (ring_size <= 1) return 0.0;
  return 4.0 * params * (ring_size - 1) / (ring_size * bw);
}

long long activation_bytes(const TensorShape& shape) {
  return shape.batch * shape.seq_len * shape.hidden * shape.bytes_per_element;
}

}  // namespace geopipe
