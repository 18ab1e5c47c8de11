// Command-line front end over the geopipe C API.
//
// Subcommands: simulate, select-dc, whatif, bubbletea, trace.
// Exit codes: 0 success, 1 internal error, 2 config error, 3 infeasible plan.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geopipe.h"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string policy;
  unsigned seed = 0;
  bool multi_conn = true;
  bool recompute = true;
  int mem_limit = 0;
  double horizon = 0.0;

  CLI::Option* policy_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* multi_conn_opt = nullptr;
  CLI::Option* recompute_opt = nullptr;
  CLI::Option* mem_limit_opt = nullptr;
  CLI::Option* horizon_opt = nullptr;
};

void add_common_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "experiment config JSON")
      ->required();
  cmd->add_option("--out", o.out, "output directory (default: out)");
  o.policy_opt = cmd->add_option(
      "--policy", o.policy, "pipeline policy: gpipe, 1f1b, varuna, atlas");
  o.seed_opt = cmd->add_option("--seed", o.seed, "request-generation seed");
  o.multi_conn_opt = cmd->add_option("--multi-conn", o.multi_conn,
                                     "parallel WAN TCP connections (BOOL)");
  o.recompute_opt = cmd->add_option("--recompute", o.recompute,
                                    "recompute activations before backward "
                                    "(BOOL)");
  o.mem_limit_opt = cmd->add_option("--mem-limit", o.mem_limit,
                                    "max in-flight microbatches per stage");
  o.horizon_opt =
      cmd->add_option("--horizon", o.horizon, "metrics horizon in MS");
}

int apply_flags(gp_session* s, const Options& o) {
  int rc = gp_load_config_file(s, o.config.c_str());
  if (rc != GP_OK) return rc;
  if (o.policy_opt->count() > 0) {
    rc = gp_set_policy(s, o.policy.c_str());
    if (rc != GP_OK) return rc;
  }
  if (o.seed_opt->count() > 0) {
    rc = gp_set_seed(s, o.seed);
    if (rc != GP_OK) return rc;
  }
  if (o.multi_conn_opt->count() > 0) {
    rc = gp_set_multi_conn(s, o.multi_conn ? 1 : 0);
    if (rc != GP_OK) return rc;
  }
  if (o.recompute_opt->count() > 0) {
    rc = gp_set_recompute(s, o.recompute ? 1 : 0);
    if (rc != GP_OK) return rc;
  }
  if (o.mem_limit_opt->count() > 0) {
    rc = gp_set_mem_limit(s, o.mem_limit);
    if (rc != GP_OK) return rc;
  }
  if (o.horizon_opt->count() > 0) {
    rc = gp_set_horizon_ms(s, o.horizon);
    if (rc != GP_OK) return rc;
  }
  return GP_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic simulator and planner for geo-distributed LM training"};
  app.require_subcommand(1);

  Options sim_o, sel_o, wi_o, bt_o, tr_o;
  CLI::App* sim = app.add_subcommand(
      "simulate", "run one training iteration, write metrics and trace");
  add_common_flags(sim, sim_o);
  CLI::App* sel = app.add_subcommand(
      "select-dc", "sweep replica counts and pick the best GPU split");
  add_common_flags(sel, sel_o);
  CLI::App* wi = app.add_subcommand(
      "whatif", "evaluate the selection sweep under each scenario patch");
  add_common_flags(wi, wi_o);
  CLI::App* bt = app.add_subcommand(
      "bubbletea", "fill training bubbles with inference prefills");
  add_common_flags(bt, bt_o);
  CLI::App* tr =
      app.add_subcommand("trace", "write the chrome trace only");
  add_common_flags(tr, tr_o);

  CLI11_PARSE(app, argc, argv);

  gp_session* s = gp_session_create();
  if (s == nullptr) {
    std::fprintf(stderr, "out of memory\n");
    return GP_ERROR;
  }

  int rc = GP_ERROR;
  if (sim->parsed()) {
    rc = apply_flags(s, sim_o);
    if (rc == GP_OK) rc = gp_run_simulate(s, sim_o.out.c_str());
  } else if (sel->parsed()) {
    rc = apply_flags(s, sel_o);
    if (rc == GP_OK) rc = gp_run_select_dc(s, sel_o.out.c_str());
    if (rc == GP_OK) std::fputs(gp_selection_table(s), stdout);
  } else if (wi->parsed()) {
    rc = apply_flags(s, wi_o);
    if (rc == GP_OK) rc = gp_run_whatif(s, wi_o.out.c_str());
  } else if (bt->parsed()) {
    rc = apply_flags(s, bt_o);
    if (rc == GP_OK) rc = gp_run_bubbletea(s, bt_o.out.c_str());
  } else if (tr->parsed()) {
    rc = apply_flags(s, tr_o);
    if (rc == GP_OK) rc = gp_run_trace(s, tr_o.out.c_str());
  }

  if (rc != GP_OK) std::fprintf(stderr, "error: %s\n", gp_last_error(s));
  gp_session_destroy(s);
  return rc;
}
