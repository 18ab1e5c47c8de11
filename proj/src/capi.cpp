#include "geopipe.h"

#include <exception>
#include <string>

#include "runner.h"

struct gp_session {
  std::string config_text;
  bool config_loaded = false;
  geopipe::CliOverrides overrides;
  std::string last_error;
  std::string selection_table;
};

namespace {

// Runs fn, mapping the library's exception classes onto return codes.
template <typename Fn>
int guarded(gp_session* s, Fn&& fn) {
  if (s == nullptr) return GP_ERROR;
  s->last_error.clear();
  try {
    fn();
    return GP_OK;
  } catch (const geopipe::ConfigError& e) {
    s->last_error = e.what();
    return GP_CONFIG_ERROR;
  } catch (const geopipe::InsufficientGpus& e) {
    s->last_error = e.what();
    return GP_INFEASIBLE;
  } catch (const std::exception& e) {
    s->last_error = e.what();
    return GP_ERROR;
  } catch (...) {
    s->last_error = "unknown error";
    return GP_ERROR;
  }
}

int require_config(gp_session* s) {
  if (s == nullptr) return GP_ERROR;
  if (!s->config_loaded) {
    s->last_error = "no config loaded";
    return GP_CONFIG_ERROR;
  }
  return GP_OK;
}

template <typename Fn>
int run_command(gp_session* s, const char* out_dir, Fn&& fn) {
  int rc = require_config(s);
  if (rc != GP_OK) return rc;
  return guarded(s, [&] {
    if (out_dir == nullptr) {
      throw geopipe::ConfigError("out", "null output directory");
    }
    fn(std::string(out_dir));
  });
}

}  // namespace

extern "C" {

gp_session* gp_session_create(void) {
  try {
    return new gp_session();
  } catch (...) {
    return nullptr;
  }
}

void gp_session_destroy(gp_session* s) { delete s; }

int gp_load_config_file(gp_session* s, const char* path) {
  return guarded(s, [&] {
    if (path == nullptr) throw geopipe::ConfigError("config", "null path");
    s->config_text = geopipe::read_text_file(path);
    s->config_loaded = true;
  });
}

int gp_load_config_text(gp_session* s, const char* text) {
  return guarded(s, [&] {
    if (text == nullptr) throw geopipe::ConfigError("config", "null text");
    s->config_text = text;
    s->config_loaded = true;
  });
}

int gp_set_policy(gp_session* s, const char* policy) {
  return guarded(s, [&] {
    if (policy == nullptr) {
      throw geopipe::ConfigError("policy", "null policy");
    }
    s->overrides.policy = std::string(policy);
  });
}

int gp_set_seed(gp_session* s, unsigned seed) {
  return guarded(s, [&] { s->overrides.seed = seed; });
}

int gp_set_multi_conn(gp_session* s, int enabled) {
  return guarded(s, [&] { s->overrides.multi_conn = (enabled != 0); });
}

int gp_set_recompute(gp_session* s, int enabled) {
  return guarded(s, [&] { s->overrides.recompute = (enabled != 0); });
}

int gp_set_mem_limit(gp_session* s, int microbatches) {
  return guarded(s, [&] { s->overrides.mem_limit = microbatches; });
}

int gp_set_horizon_ms(gp_session* s, double horizon_ms) {
  return guarded(s, [&] { s->overrides.horizon_ms = horizon_ms; });
}

int gp_run_simulate(gp_session* s, const char* out_dir) {
  return run_command(s, out_dir, [&](const std::string& out) {
    geopipe::run_simulate(s->config_text, s->overrides, out);
  });
}

int gp_run_trace(gp_session* s, const char* out_dir) {
  return run_command(s, out_dir, [&](const std::string& out) {
    geopipe::run_trace(s->config_text, s->overrides, out);
  });
}

int gp_run_select_dc(gp_session* s, const char* out_dir) {
  return run_command(s, out_dir, [&](const std::string& out) {
    s->selection_table = geopipe::run_select_dc(s->config_text, s->overrides,
                                                out);
  });
}

int gp_run_whatif(gp_session* s, const char* out_dir) {
  return run_command(s, out_dir, [&](const std::string& out) {
    geopipe::run_whatif(s->config_text, s->overrides, out);
  });
}

int gp_run_bubbletea(gp_session* s, const char* out_dir) {
  return run_command(s, out_dir, [&](const std::string& out) {
    geopipe::run_bubbletea(s->config_text, s->overrides, out);
  });
}

const char* gp_last_error(gp_session* s) {
  return s == nullptr ? "" : s->last_error.c_str();
}

const char* gp_selection_table(gp_session* s) {
  return s == nullptr ? "" : s->selection_table.c_str();
}

}  // extern "C"
