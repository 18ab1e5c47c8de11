// Model sizing, compute profiles, and the greedy DC partition walk.

#include <doctest.h>

#include <string>
#include <vector>

#include "topology.h"
#include "workload.h"

#include "support/fixtures.h"

using namespace geopipe;

namespace {

bool same_plan(const ParallelismPlan& a, const ParallelismPlan& b) {
  if (a.dp_cells.size() != b.dp_cells.size()) return false;
  for (size_t c = 0; c < a.dp_cells.size(); ++c) {
    const auto& pa = a.dp_cells[c].pipelines;
    const auto& pb = b.dp_cells[c].pipelines;
    if (pa.size() != pb.size()) return false;
    for (size_t p = 0; p < pa.size(); ++p) {
      if (pa[p].stages.size() != pb[p].stages.size()) return false;
      for (size_t s = 0; s < pa[p].stages.size(); ++s) {
        const Stage& x = pa[p].stages[s];
        const Stage& y = pb[p].stages[s];
        if (x.dc_id != y.dc_id || x.gpu_ids != y.gpu_ids ||
            x.partition_begin != y.partition_begin ||
            x.partition_end != y.partition_end || x.tp_degree != y.tp_degree)
          return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("partition count is a ceiling division of layers") {
  ModelSpec m;
  m.num_layers = 6;
  m.layers_per_partition = 1;
  CHECK(m.partition_count() == 6);
  m.layers_per_partition = 2;
  CHECK(m.partition_count() == 3);
  m.layers_per_partition = 4;
  CHECK(m.partition_count() == 2);  // 6 layers over blocks of 4
  m.layers_per_partition = 6;
  CHECK(m.partition_count() == 1);
}

TEST_CASE("parameter count defaults to 12 H^2 per layer") {
  ModelSpec m;
  m.hidden = 1000;
  CHECK(m.effective_params_per_layer() == 12e6);
  m.params_per_layer = 5.0;
  CHECK(m.effective_params_per_layer() == 5.0);
}

TEST_CASE("the activation shape mirrors the model dimensions") {
  ModelSpec m = fixtures::unit12_model();
  TensorShape s = m.activation_shape();
  CHECK(s.batch == 1);
  CHECK(s.seq_len == 625);
  CHECK(s.hidden == 1000);
  CHECK(s.bytes_per_element == 2);
  CHECK(activation_bytes(s) == 1250000);
}

TEST_CASE("explicit compute profiles validate their durations") {
  ComputeProfile p = ComputeProfile::explicit_durations(1.5, 3.0, 1.5);
  CHECK(p.fwd_ms == 1.5);
  CHECK(p.bwd_ms == 3.0);
  CHECK(p.recompute_ms == 1.5);
  CHECK_FALSE(p.ratio_C.has_value());
  CHECK_THROWS_AS(ComputeProfile::explicit_durations(0.0, 1.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(ComputeProfile::explicit_durations(1.0, 0.0, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(ComputeProfile::explicit_durations(1.0, 1.0, -1.0),
                  ConfigError);
  // Zero recompute is allowed: it models skipping recomputation.
  CHECK(ComputeProfile::explicit_durations(1.0, 1.0, 0.0).recompute_ms == 0.0);
}

TEST_CASE("ratio-derived profiles anchor forward time to the link speed") {
  ModelSpec m = fixtures::unit12_model();
  WanProfile wan;
  wan.tcp_table = default_tcp_table();
  wan.pair_bw_cap = gbps_to_bytes_per_ms(5.0);
  // 1.25 MB over 625,000 bytes/ms serializes in 2 ms.
  ComputeProfile p = ComputeProfile::from_ratio(2.0, m, wan);
  CHECK(p.fwd_ms == 1.0);
  CHECK(p.bwd_ms == 2.0);
  CHECK(p.recompute_ms == 1.0);
  CHECK(p.ratio_C == 2.0);
  CHECK_THROWS_AS(ComputeProfile::from_ratio(0.0, m, wan), ConfigError);
  CHECK_THROWS_AS(ComputeProfile::from_ratio(-1.0, m, wan), ConfigError);
}

TEST_CASE("the partition walk fills DCs in order with whole stages") {
  auto topo = fixtures::unit12_topology();
  auto model = fixtures::unit12_model();
  ParallelismPlan plan = build_plan(topo, model, 1, 2, fixtures::dc012());

  REQUIRE(plan.dp_cells.size() == 1);
  CHECK(plan.pipelines_per_cell() == 2);
  CHECK(plan.num_stages() == 6);
  CHECK(plan.total_gpus_used() == 12);

  // Two pipelines of six stages: each DC of four GPUs hosts two stages of
  // both pipelines, so the stage->DC map is dc0,dc0,dc1,dc1,dc2,dc2.
  const char* expect_dc[] = {"dc0", "dc0", "dc1", "dc1", "dc2", "dc2"};
  std::vector<int> seen_gpus;
  for (int p = 0; p < 2; ++p)
    for (int s = 0; s < 6; ++s) {
      const Stage& st = plan.dp_cells[0].pipelines[p].stages[s];
      CHECK(st.dc_id == expect_dc[s]);
      CHECK(st.partition_begin == s);
      CHECK(st.partition_end == s + 1);
      CHECK(st.tp_degree == 1);
      REQUIRE(st.gpu_ids.size() == 1);
      seen_gpus.push_back(st.gpu_ids[0]);
    }
  // All twelve GPUs distinct and within range.
  std::sort(seen_gpus.begin(), seen_gpus.end());
  for (int g = 0; g < 12; ++g) CHECK(seen_gpus[g] == g);
}

TEST_CASE("tensor-parallel stages consume tp_degree GPUs each") {
  auto topo = fixtures::make_topology({8, 8}, 10.0, 5.0);
  ModelSpec model = fixtures::unit12_model();
  model.num_layers = 2;
  ParallelismPlan plan =
      build_plan(topo, model, 1, 2, {"dc0", "dc1"}, /*tp_degree=*/2);
  CHECK(plan.num_stages() == 2);
  CHECK(plan.total_gpus_used() == 8);
  for (int p = 0; p < 2; ++p)
    for (int s = 0; s < 2; ++s) {
      const Stage& st = plan.dp_cells[0].pipelines[p].stages[s];
      CHECK(st.tp_degree == 2);
      CHECK(st.gpu_ids.size() == 2);
    }
}

TEST_CASE("grouped layers shorten the pipeline") {
  auto topo = fixtures::unit12_topology();
  ModelSpec model = fixtures::unit12_model();
  model.layers_per_partition = 2;  // 6 layers -> 3 stages
  ParallelismPlan plan = build_plan(topo, model, 1, 2, fixtures::dc012());
  CHECK(plan.num_stages() == 3);
  const auto& stages = plan.dp_cells[0].pipelines[0].stages;
  CHECK(stages[0].dc_id == "dc0");
  CHECK(stages[1].dc_id == "dc0");  // dc0 fits floor(4/2) = 2 stages
  CHECK(stages[2].dc_id == "dc1");
}

TEST_CASE("plans that do not fit raise an infeasibility error") {
  auto topo = fixtures::unit12_topology();
  auto model = fixtures::unit12_model();
  CHECK_THROWS_AS(build_plan(topo, model, 2, 2, fixtures::dc012()),
                  InsufficientGpus);
  CHECK_THROWS_AS(build_plan(topo, model, 1, 5, fixtures::dc012()),
                  InsufficientGpus);
  CHECK_THROWS_AS(build_plan(topo, model, 0, 1), ConfigError);
  CHECK_THROWS_AS(build_plan(topo, model, 1, 0), ConfigError);
  CHECK_THROWS_AS(build_plan(topo, model, 1, 1, {}, 0), ConfigError);
}

TEST_CASE("the default DC order sorts by capacity with stable ties") {
  auto topo = fixtures::make_topology({4, 6, 6}, 10.0, 5.0);
  std::vector<std::string> order = default_dc_order(topo);
  REQUIRE(order.size() == 3);
  CHECK(order[0] == "dc1");
  CHECK(order[1] == "dc2");  // tie with dc1 keeps config order
  CHECK(order[2] == "dc0");

  // build_plan without an order uses it: the largest DC hosts stage 0.
  ModelSpec model = fixtures::unit12_model();
  model.num_layers = 3;
  ParallelismPlan plan = build_plan(topo, model, 1, 2);
  const auto& stages = plan.dp_cells[0].pipelines[0].stages;
  CHECK(stages[0].dc_id == "dc1");
  CHECK(stages[1].dc_id == "dc1");
  CHECK(stages[2].dc_id == "dc1");  // floor(6/2) = 3 stages fit in dc1
}

TEST_CASE("plan construction is deterministic") {
  auto topo = fixtures::five_dc_topology();
  auto model = fixtures::five_dc_model();
  ParallelismPlan a = build_plan(topo, model, 3, 2);
  ParallelismPlan b = build_plan(topo, model, 3, 2);
  CHECK(same_plan(a, b));
}

TEST_CASE("the communication-to-compute ratio tracks the worst boundary") {
  auto topo = fixtures::unit12_topology();
  auto model = fixtures::unit12_model();
  auto prof = fixtures::unit_profile();
  ParallelismPlan plan = build_plan(topo, model, 1, 2, fixtures::dc012());
  // 1.25 MB / 625,000 bytes/ms = 2 ms serialization over 1 ms forwards.
  CHECK(comm_compute_ratio(plan, model, topo, prof) == 2.0);

  // A single-DC plan never crosses the WAN.
  auto topo1 = fixtures::make_topology({12}, 0.0, 5.0);
  ParallelismPlan local = build_plan(topo1, model, 1, 2, {"dc0"});
  CHECK(comm_compute_ratio(local, model, topo1, prof) == 0.0);

  // Slower forwards raise the ratio proportionally.
  auto half = ComputeProfile::explicit_durations(0.5, 1.0, 0.5);
  CHECK(comm_compute_ratio(plan, model, topo, half) == 4.0);
}
