// Topology parsing, validation, serialization, and lookups.

#include <doctest.h>

#include <string>
#include <vector>

#include "topology.h"

#include "support/fixtures.h"

using namespace geopipe;

namespace {

// Minimal two-DC document used as the base for the error-path cases.
const char* kTwoDcDoc = R"({
  "datacenters": [
    {"id": "a", "gpu_count": 8, "intra_bw_gbps": 100.0},
    {"id": "b", "gpu_count": 4}
  ],
  "wan": {"latency_ms": {"a|b": 25.0}, "pair_bw_cap_gbps": 2.0}
})";

std::string config_error_path(const std::string& text) {
  try {
    load_topology(text);
  } catch (const ConfigError& e) {
    return e.field_path();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("default calibration table holds the four measured points") {
  auto table = default_tcp_table();
  REQUIRE(table.size() == 4);
  const double expect[][2] = {{10, 1220}, {20, 600}, {30, 396}, {40, 293}};
  for (size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].latency_ms == expect[i][0]);
    CHECK(table[i].bw == mbps_to_bytes_per_ms(expect[i][1]));
  }
}

TEST_CASE("unit conversions use 125000 bytes/ms per Gbps") {
  CHECK(gbps_to_bytes_per_ms(5.0) == 625000.0);
  CHECK(gbps_to_bytes_per_ms(1.0) == 125000.0);
  CHECK(mbps_to_bytes_per_ms(293.0) == 36625.0);
}

TEST_CASE("loading a topology converts units and applies defaults") {
  ClusterTopology t = load_topology(kTwoDcDoc);
  REQUIRE(t.datacenters.size() == 2);
  CHECK(t.datacenters[0].id == "a");
  CHECK(t.datacenters[0].gpu_count == 8);
  CHECK(t.datacenters[0].intra_bw == gbps_to_bytes_per_ms(100.0));
  CHECK(t.datacenters[0].intra_latency_ms == 0.0);
  CHECK(t.datacenters[1].intra_bw == gbps_to_bytes_per_ms(100.0));  // default
  CHECK(t.wan.pair_bw_cap == gbps_to_bytes_per_ms(2.0));
  CHECK(t.wan.tcp_table.size() == 4);  // default table when omitted
  CHECK(t.wan.latency_between("a", "b") == 25.0);
  CHECK(t.wan.latency_between("b", "a") == 25.0);  // symmetric lookup
  CHECK(t.wan.latency_between("a", "a") == 0.0);
  CHECK(t.total_gpus() == 12);
  CHECK(t.dc("b").gpu_count == 4);
}

TEST_CASE("a single-DC topology needs no WAN section") {
  ClusterTopology t =
      load_topology(R"({"datacenters": [{"id": "x", "gpu_count": 2}]})");
  CHECK(t.wan.pair_bw_cap == gbps_to_bytes_per_ms(5.0));  // default cap
  CHECK(t.wan.latency_ms.empty());
}

TEST_CASE("an explicit calibration table overrides the default") {
  ClusterTopology t = load_topology(R"({
    "datacenters": [{"id": "x", "gpu_count": 2}],
    "wan": {"tcp_table": [[5.0, 2000.0], [50.0, 100.0]]}
  })");
  REQUIRE(t.wan.tcp_table.size() == 2);
  CHECK(t.wan.tcp_table[0].latency_ms == 5.0);
  CHECK(t.wan.tcp_table[0].bw == mbps_to_bytes_per_ms(2000.0));
  CHECK(t.wan.tcp_table[1].bw == mbps_to_bytes_per_ms(100.0));
}

TEST_CASE("serialization round-trips exactly") {
  ClusterTopology t = fixtures::make_topology({4, 4, 4}, 10.0, 5.0);
  t.datacenters[1].intra_latency_ms = 0.25;
  t.wan.latency_ms[{"dc0", "dc2"}] = 42.5;
  CHECK(load_topology(serialize_topology(t)) == t);

  ClusterTopology u = load_topology(kTwoDcDoc);
  CHECK(load_topology(serialize_topology(u)) == u);
}

TEST_CASE("equality distinguishes every field") {
  ClusterTopology t = fixtures::make_topology({2, 2}, 5.0, 5.0);
  ClusterTopology u = t;
  CHECK(t == u);
  u.datacenters[0].gpu_count = 3;
  CHECK_FALSE(t == u);
  u = t;
  u.wan.pair_bw_cap += 1.0;
  CHECK_FALSE(t == u);
  u = t;
  u.wan.tcp_table[0].bw += 1.0;
  CHECK_FALSE(t == u);
  u = t;
  u.wan.latency_ms[{"dc0", "dc1"}] = 6.0;
  CHECK_FALSE(t == u);
}

TEST_CASE("unknown datacenter lookups fail with the field path") {
  ClusterTopology t = load_topology(kTwoDcDoc);
  CHECK_THROWS_AS(t.dc("nope"), ConfigError);
  t.wan.latency_ms.clear();
  try {
    t.wan.latency_between("a", "b");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field_path() == "wan.latency_ms");
  }
}

TEST_CASE("malformed documents name the offending field") {
  CHECK(config_error_path("not json") == "");
  CHECK(config_error_path("[1, 2]") == "");
  CHECK(config_error_path("{}") == "datacenters");
  CHECK(config_error_path(R"({"datacenters": []})") == "datacenters");
  CHECK(config_error_path(R"({"datacenters": [{"gpu_count": 1}]})") ==
        "datacenters[0].id");
  CHECK(config_error_path(R"({"datacenters": [{"id": "a"}]})") ==
        "datacenters[0].gpu_count");
  CHECK(config_error_path(
            R"({"datacenters": [{"id": "a", "gpu_count": 0}]})") ==
        "datacenters[0].gpu_count");
  CHECK(config_error_path(
            R"({"datacenters": [{"id": "a", "gpu_count": 1},
                                {"id": "a", "gpu_count": 1}]})") ==
        "datacenters[1].id");
  CHECK(config_error_path(
            R"({"datacenters": [{"id": "a", "gpu_count": 1,
                                 "intra_bw_gbps": 0}]})") ==
        "datacenters[0].intra_bw_gbps");
  CHECK(config_error_path(
            R"({"datacenters": [{"id": "a", "gpu_count": 1,
                                 "intra_latency_ms": -1}]})") ==
        "datacenters[0].intra_latency_ms");

  auto wan_doc = [](const std::string& wan) {
    return R"({"datacenters": [{"id": "a", "gpu_count": 1},
                               {"id": "b", "gpu_count": 1}],
               "wan": )" +
           wan + "}";
  };
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1}, "pair_bw_cap_gbps": 0})")) ==
        "wan.pair_bw_cap_gbps");
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1}, "tcp_table": 7})")) ==
        "wan.tcp_table");
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1}, "tcp_table": [[10]]})")) ==
        "wan.tcp_table[0]");
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1},
                "tcp_table": [[10, 100], [5, 50]]})")) ==
        "wan.tcp_table[1]");  // latencies must increase
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1},
                "tcp_table": [[10, 100], [20, 100]]})")) ==
        "wan.tcp_table[1]");  // bandwidths must decrease
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {"ab": 1}})")) ==
        "wan.latency_ms.ab");
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {"a|zz": 1}})")) ==
        "wan.latency_ms.a|zz");
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {"a|b": "x"}})")) ==
        "wan.latency_ms.a|b");
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {"a|a": 3}})")) ==
        "wan.latency_ms.a|a");
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {"a|b": -1}})")) ==
        "wan.latency_ms.a|b");
  CHECK(config_error_path(wan_doc(
            R"({"latency_ms": {"a|b": 1, "b|a": 2}})")) ==
        "wan.latency_ms.b|a");  // asymmetric latency
  CHECK(config_error_path(wan_doc(R"({"latency_ms": {}})")) ==
        "wan.latency_ms");  // missing pair
}
