#include "topology.h"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

namespace geopipe {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> pair_key(const std::string& a,
                                             const std::string& b) {
  return a <= b ? std::make_pair(a, b) : std::make_pair(b, a);
}

}  // namespace

double WanProfile::latency_between(const std::string& a,
                                   const std::string& b) const {
  if (a == b) return 0.0;
  auto it = latency_ms.find(pair_key(a, b));
  if (it == latency_ms.end()) {
    throw ConfigError("wan.latency_ms",
                      "missing latency for pair " + a + "|" + b);
  }
  return it->second;
}

const Datacenter& ClusterTopology::dc(const std::string& id) const {
  for (const auto& d : datacenters) {
    if (d.id == id) return d;
  }
  throw ConfigError("datacenters", "unknown datacenter id " + id);
}

int ClusterTopology::total_gpus() const {
  int total = 0;
  for (const auto& d : datacenters) total += d.gpu_count;
  return total;
}

std::vector<TcpPoint> default_tcp_table() {
  return {
      {10.0, mbps_to_bytes_per_ms(1220.0)},
      {20.0, mbps_to_bytes_per_ms(600.0)},
      {30.0, mbps_to_bytes_per_ms(396.0)},
      {40.0, mbps_to_bytes_per_ms(293.0)},
  };
}

namespace {

void validate_tcp_table(const std::vector<TcpPoint>& table,
                        const std::string& path) {
  if (table.empty()) throw ConfigError(path, "tcp_table must be non-empty");
  for (size_t i = 0; i < table.size(); ++i) {
    if (table[i].latency_ms <= 0 || table[i].bw <= 0) {
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "latency and bandwidth must be positive");
    }
    if (i > 0) {
      if (table[i].latency_ms <= table[i - 1].latency_ms) {
        throw ConfigError(path + "[" + std::to_string(i) + "]",
                          "latencies must be strictly increasing");
      }
      if (table[i].bw >= table[i - 1].bw) {
        throw ConfigError(path + "[" + std::to_string(i) + "]",
                          "bandwidths must be strictly decreasing");
      }
    }
  }
}

}  // namespace

ClusterTopology parse_topology_json(const json& doc);

ClusterTopology parse_topology_json(const json& doc) {
  ClusterTopology topo;
  if (!doc.contains("datacenters") || !doc["datacenters"].is_array() ||
      doc["datacenters"].empty()) {
    throw ConfigError("datacenters", "required non-empty list");
  }
  std::set<std::string> seen_ids;
  for (size_t i = 0; i < doc["datacenters"].size(); ++i) {
    const json& d = doc["datacenters"][i];
    const std::string path = "datacenters[" + std::to_string(i) + "]";
    Datacenter dc;
    if (!d.contains("id") || !d["id"].is_string()) {
      throw ConfigError(path + ".id", "required string");
    }
    dc.id = d["id"].get<std::string>();
    if (!seen_ids.insert(dc.id).second) {
      throw ConfigError(path + ".id", "duplicate datacenter id " + dc.id);
    }
    if (!d.contains("gpu_count") || !d["gpu_count"].is_number_integer() ||
        d["gpu_count"].get<long long>() < 1) {
      throw ConfigError(path + ".gpu_count", "required integer >= 1");
    }
    dc.gpu_count = d["gpu_count"].get<int>();
    double intra_gbps = d.value("intra_bw_gbps", 100.0);
    if (!(intra_gbps > 0)) {
      throw ConfigError(path + ".intra_bw_gbps", "must be > 0");
    }
    dc.intra_bw = gbps_to_bytes_per_ms(intra_gbps);
    dc.intra_latency_ms = d.value("intra_latency_ms", 0.0);
    if (dc.intra_latency_ms < 0) {
      throw ConfigError(path + ".intra_latency_ms", "must be >= 0");
    }
    topo.datacenters.push_back(dc);
  }

  const json wan = doc.value("wan", json::object());
  double cap_gbps = wan.value("pair_bw_cap_gbps", 5.0);
  if (!(cap_gbps > 0)) {
    throw ConfigError("wan.pair_bw_cap_gbps", "must be > 0");
  }
  topo.wan.pair_bw_cap = gbps_to_bytes_per_ms(cap_gbps);

  if (wan.contains("tcp_table")) {
    if (!wan["tcp_table"].is_array()) {
      throw ConfigError("wan.tcp_table", "must be a list of [ms, mbps] pairs");
    }
    for (size_t i = 0; i < wan["tcp_table"].size(); ++i) {
      const json& row = wan["tcp_table"][i];
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() ||
          !row[1].is_number()) {
        throw ConfigError("wan.tcp_table[" + std::to_string(i) + "]",
                          "must be a [latency_ms, mbps] pair");
      }
      topo.wan.tcp_table.push_back(
          {row[0].get<double>(), mbps_to_bytes_per_ms(row[1].get<double>())});
    }
  } else {
    topo.wan.tcp_table = default_tcp_table();
  }
  validate_tcp_table(topo.wan.tcp_table, "wan.tcp_table");

  const json lat = wan.value("latency_ms", json::object());
  if (!lat.is_object()) {
    throw ConfigError("wan.latency_ms", "must be a map of \"a|b\" -> ms");
  }
  for (auto it = lat.begin(); it != lat.end(); ++it) {
    const std::string key = it.key();
    auto bar = key.find('|');
    if (bar == std::string::npos) {
      throw ConfigError("wan.latency_ms." + key,
                        "key must be of the form \"a|b\"");
    }
    std::string a = key.substr(0, bar);
    std::string b = key.substr(bar + 1);
    if (!seen_ids.count(a) || !seen_ids.count(b)) {
      throw ConfigError("wan.latency_ms." + key, "unknown datacenter in pair");
    }
    if (!it.value().is_number()) {
      throw ConfigError("wan.latency_ms." + key, "latency must be a number");
    }
    double v = it.value().get<double>();
    if (a == b) {
      if (v != 0.0) {
        throw ConfigError("wan.latency_ms." + key,
                          "self latency must be zero");
      }
      continue;
    }
    if (v < 0) throw ConfigError("wan.latency_ms." + key, "must be >= 0");
    auto k = pair_key(a, b);
    auto existing = topo.wan.latency_ms.find(k);
    if (existing != topo.wan.latency_ms.end() && existing->second != v) {
      throw ConfigError("wan.latency_ms." + key,
                        "asymmetric latency for pair " + a + "|" + b);
    }
    topo.wan.latency_ms[k] = v;
  }

  // Every distinct DC pair must have a latency entry.
  for (size_t i = 0; i < topo.datacenters.size(); ++i) {
    for (size_t j = i + 1; j < topo.datacenters.size(); ++j) {
      auto k = pair_key(topo.datacenters[i].id, topo.datacenters[j].id);
      if (!topo.wan.latency_ms.count(k)) {
        throw ConfigError("wan.latency_ms", "missing latency for pair " +
                                                k.first + "|" + k.second);
      }
    }
  }
  return topo;
}

ClusterTopology load_topology(const std::string& config_text) {
  json doc;
  try {
    doc = json::parse(config_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  return parse_topology_json(doc);
}

std::string serialize_topology(const ClusterTopology& topo) {
  json doc;
  doc["datacenters"] = json::array();
  for (const auto& d : topo.datacenters) {
    doc["datacenters"].push_back(
        {{"id", d.id},
         {"gpu_count", d.gpu_count},
         {"intra_bw_gbps", d.intra_bw / 125000.0},
         {"intra_latency_ms", d.intra_latency_ms}});
  }
  json lat = json::object();
  for (const auto& [key, v] : topo.wan.latency_ms) {
    lat[key.first + "|" + key.second] = v;
  }
  json table = json::array();
  for (const auto& p : topo.wan.tcp_table) {
    table.push_back({p.latency_ms, p.bw / 125.0});
  }
  doc["wan"] = {{"latency_ms", lat},
                {"pair_bw_cap_gbps", topo.wan.pair_bw_cap / 125000.0},
                {"tcp_table", table}};
  return doc.dump(2);
}

bool operator==(const Datacenter& a, const Datacenter& b) {
  return a.id == b.id && a.gpu_count == b.gpu_count &&
         a.intra_bw == b.intra_bw && a.intra_latency_ms == b.intra_latency_ms;
}

bool operator==(const WanProfile& a, const WanProfile& b) {
  if (a.latency_ms != b.latency_ms || a.pair_bw_cap != b.pair_bw_cap ||
      a.tcp_table.size() != b.tcp_table.size()) {
    return false;
  }
  for (size_t i = 0; i < a.tcp_table.size(); ++i) {
    if (a.tcp_table[i].latency_ms != b.tcp_table[i].latency_ms ||
        a.tcp_table[i].bw != b.tcp_table[i].bw) {
      return false;
    }
  }
  return true;
}

bool operator==(const ClusterTopology& a, const ClusterTopology& b) {
  return a.datacenters == b.datacenters && a.wan == b.wan;
}

}  // namespace geopipe
