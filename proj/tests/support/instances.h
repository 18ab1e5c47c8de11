#pragma once

// Seeded random instance generator for the property suites. Instances stay
// small (<= 2 cells, <= 3 pipelines, <= 4 stages, <= 6 microbatches) so a
// thousand of them schedule and validate in seconds.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "scheduler.h"
#include "topology.h"
#include "workload.h"

#include "fixtures.h"

namespace testsupport {

using namespace geopipe;

struct RandomInstance {
  ClusterTopology topo;
  ModelSpec model;
  ComputeProfile profile;
  ParallelismPlan plan;
  SchedulerOptions opts;
  int D = 1;
  int C = 1;
};

// When `cap_covers_all` is set the memory limit is at least M, the regime in
// which the pooled policy's flush structure dominates the in-order baseline.
inline RandomInstance random_instance(std::mt19937& rng,
                                      bool cap_covers_all = false) {
  auto pick = [&](int lo, int hi) {
    return lo + static_cast<int>(rng() % (hi - lo + 1));
  };
  RandomInstance ri;
  const int S = pick(1, 4);
  ri.C = pick(1, 3);
  ri.D = pick(1, 2);
  const int M = pick(1, 6);

  // Random contiguous stage->DC segmentation over at most three DCs.
  std::vector<int> dc_of_stage(S, 0);
  for (int s = 1; s < S; ++s)
    dc_of_stage[s] =
        std::min(dc_of_stage[s - 1] + (rng() % 2 ? 1 : 0), 2);
  int num_dcs = dc_of_stage.back() + 1;
  std::vector<int> counts(num_dcs, 0);
  for (int d : dc_of_stage) counts[d] += ri.D * ri.C;

  const double latencies[] = {0.0, 5.0, 10.0, 40.0};
  const double caps[] = {1.0, 2.0, 5.0, 10.0};
  ri.topo = fixtures::make_topology(counts, latencies[rng() % 4],
                                    caps[rng() % 4]);

  ri.model.num_layers = S;
  ri.model.layers_per_partition = 1;
  ri.model.hidden = 256LL << (rng() % 4);
  ri.model.seq_len = 128LL << (rng() % 4);
  ri.model.microbatch = 1;
  ri.model.num_microbatches = M;
  ri.model.bytes_per_element = 2;

  std::uniform_real_distribution<double> fwd_dist(0.3, 3.0);
  std::uniform_real_distribution<double> bwd_scale(1.0, 2.5);
  double f = fwd_dist(rng);
  ri.profile = ComputeProfile::explicit_durations(f, f * bwd_scale(rng), f);

  ri.opts.recompute = rng() % 2 == 0;
  ri.opts.multi_conn = rng() % 2 == 0;
  if (cap_covers_all) {
    ri.opts.mem_limit = std::max(M, S);
  } else {
    switch (rng() % 3) {
      case 0: ri.opts.mem_limit.reset(); break;
      case 1: ri.opts.mem_limit = M; break;
      default: ri.opts.mem_limit = std::max(1, M / 2 + 1); break;
    }
  }

  std::vector<std::string> order;
  for (int d = 0; d < num_dcs; ++d) order.push_back("dc" + std::to_string(d));
  ri.plan = build_plan(ri.topo, ri.model, ri.D, ri.C, order);
  return ri;
}

inline const std::vector<std::string>& all_policies() {
  static const std::vector<std::string> p = {"gpipe", "1f1b", "varuna",
                                             "atlas"};
  return p;
}

}  // namespace testsupport
