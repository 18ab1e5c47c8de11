#include "config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace geopipe {

using nlohmann::json;

namespace {

const std::set<std::string>& valid_policies() {
  static const std::set<std::string> p{"gpipe", "1f1b", "varuna", "atlas"};
  return p;
}

long long require_int(const json& node, const std::string& path,
                      long long min_value) {
  if (!node.is_number_integer()) {
    throw ConfigError(path, "required integer");
  }
  long long v = node.get<long long>();
  if (v < min_value) {
    throw ConfigError(path, "must be >= " + std::to_string(min_value));
  }
  return v;
}

double require_number(const json& node, const std::string& path,
                      bool positive) {
  if (!node.is_number()) throw ConfigError(path, "required number");
  double v = node.get<double>();
  if (positive && !(v > 0)) throw ConfigError(path, "must be > 0");
  if (!positive && v < 0) throw ConfigError(path, "must be >= 0");
  return v;
}

ModelSpec parse_model(const json& doc) {
  ModelSpec m;
  if (!doc.contains("model") || !doc["model"].is_object()) {
    throw ConfigError("model", "required object");
  }
  const json& j = doc["model"];
  m.num_layers = static_cast<int>(
      require_int(j.value("num_layers", json(1)), "model.num_layers", 1));
  m.hidden = require_int(j.value("hidden", json(1)), "model.hidden", 1);
  m.seq_len = require_int(j.value("seq_len", json(1)), "model.seq_len", 1);
  m.microbatch =
      require_int(j.value("microbatch", json(1)), "model.microbatch", 1);
  m.num_microbatches = static_cast<int>(require_int(
      j.value("num_microbatches", json(1)), "model.num_microbatches", 1));
  if (j.contains("params_per_layer")) {
    m.params_per_layer =
        require_number(j["params_per_layer"], "model.params_per_layer", false);
  }
  m.bytes_per_element = static_cast<int>(require_int(
      j.value("bytes_per_element", json(2)), "model.bytes_per_element", 1));
  m.layers_per_partition = static_cast<int>(
      require_int(j.value("layers_per_partition", json(1)),
                  "model.layers_per_partition", 1));
  return m;
}

ComputeProfile parse_compute(const json& doc, const ModelSpec& model,
                             const WanProfile& wan) {
  if (!doc.contains("compute") || !doc["compute"].is_object()) {
    throw ConfigError("compute", "required object");
  }
  const json& j = doc["compute"];
  const bool has_ratio = j.contains("comm_compute_ratio");
  const bool has_explicit = j.contains("fwd_ms");
  if (has_ratio == has_explicit) {
    throw ConfigError("compute",
                      "give either fwd_ms/bwd_ms/recompute_ms or "
                      "comm_compute_ratio, not both");
  }
  if (has_ratio) {
    double ratio =
        require_number(j["comm_compute_ratio"], "compute.comm_compute_ratio",
                       true);
    return ComputeProfile::from_ratio(ratio, model, wan);
  }
  double fwd = require_number(j["fwd_ms"], "compute.fwd_ms", true);
  if (!j.contains("bwd_ms")) throw ConfigError("compute.bwd_ms", "required");
  double bwd = require_number(j["bwd_ms"], "compute.bwd_ms", true);
  double rec = require_number(j.value("recompute_ms", json(fwd)),
                              "compute.recompute_ms", false);
  return ComputeProfile::explicit_durations(fwd, bwd, rec);
}

std::vector<std::string> parse_dc_order(const json& node,
                                        const std::string& path,
                                        const ClusterTopology& topo) {
  if (!node.is_array()) throw ConfigError(path, "must be a list of DC ids");
  std::vector<std::string> order;
  for (size_t i = 0; i < node.size(); ++i) {
    if (!node[i].is_string()) {
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "must be a DC id string");
    }
    order.push_back(node[i].get<std::string>());
    topo.dc(order.back());  // throws on unknown id
  }
  return order;
}

RunConfig parse_run_config(const json& doc, const std::string& text) {
  RunConfig c;
  c.topo = load_topology(text);
  c.model = parse_model(doc);
  c.profile = parse_compute(doc, c.model, c.topo.wan);

  const json par = doc.value("parallelism", json::object());
  if (!par.is_object()) throw ConfigError("parallelism", "must be an object");
  c.dp_cells = static_cast<int>(
      require_int(par.value("dp_cells", json(1)), "parallelism.dp_cells", 1));
  c.pipelines_per_cell = static_cast<int>(
      require_int(par.value("pipelines_per_cell", json(1)),
                  "parallelism.pipelines_per_cell", 1));
  c.tp_degree = static_cast<int>(require_int(
      par.value("tp_degree", json(1)), "parallelism.tp_degree", 1));
  if (par.contains("dc_order")) {
    c.dc_order = parse_dc_order(par["dc_order"], "parallelism.dc_order",
                                c.topo);
  }

  const json sim = doc.value("simulate", json::object());
  if (!sim.is_object()) throw ConfigError("simulate", "must be an object");
  c.policy = sim.value("policy", "atlas");
  if (!valid_policies().count(c.policy)) {
    throw ConfigError("simulate.policy",
                      "must be one of gpipe, 1f1b, varuna, atlas");
  }
  if (sim.contains("allreduce") && !sim["allreduce"].is_boolean()) {
    throw ConfigError("simulate.allreduce", "must be a boolean");
  }
  c.with_allreduce = sim.value("allreduce", false);
  if (sim.contains("reference_policy")) {
    std::string ref = sim["reference_policy"].get<std::string>();
    if (!valid_policies().count(ref)) {
      throw ConfigError("simulate.reference_policy",
                        "must be one of gpipe, 1f1b, varuna, atlas");
    }
    c.reference_policy = ref;
  }
  if (sim.contains("multi_conn") && !sim["multi_conn"].is_boolean()) {
    throw ConfigError("simulate.multi_conn", "must be a boolean");
  }
  c.sched.multi_conn = sim.value("multi_conn", true);
  if (sim.contains("recompute") && !sim["recompute"].is_boolean()) {
    throw ConfigError("simulate.recompute", "must be a boolean");
  }
  c.sched.recompute = sim.value("recompute", true);
  c.sched.n_connections = static_cast<int>(require_int(
      sim.value("n_connections", json(32)), "simulate.n_connections", 1));
  if (sim.contains("mem_limit") && !sim["mem_limit"].is_null()) {
    c.sched.mem_limit = static_cast<int>(
        require_int(sim["mem_limit"], "simulate.mem_limit", 1));
  }
  c.seed = static_cast<unsigned>(
      require_int(doc.value("seed", json(42)), "seed", 0));
  if (doc.contains("horizon_ms") && !doc["horizon_ms"].is_null()) {
    c.horizon_ms = require_number(doc["horizon_ms"], "horizon_ms", true);
  }

  const json sel = doc.value("select", json::object());
  if (!sel.is_object()) throw ConfigError("select", "must be an object");
  if (sel.contains("d_max") && !sel["d_max"].is_null()) {
    c.select_d_max =
        static_cast<int>(require_int(sel["d_max"], "select.d_max", 1));
  }
  if (sel.contains("pipelines_per_cell")) {
    c.select_pipelines_per_cell = static_cast<int>(require_int(
        sel["pipelines_per_cell"], "select.pipelines_per_cell", 1));
  }
  if (sel.contains("tp_degree")) {
    c.select_tp_degree = static_cast<int>(
        require_int(sel["tp_degree"], "select.tp_degree", 1));
  }
  if (sel.contains("dc_order")) {
    c.select_dc_order =
        parse_dc_order(sel["dc_order"], "select.dc_order", c.topo);
  }
  c.select_policy = sel.value("policy", "atlas");
  if (!valid_policies().count(c.select_policy)) {
    throw ConfigError("select.policy",
                      "must be one of gpipe, 1f1b, varuna, atlas");
  }

  const json pre = doc.value("prefill", json::object());
  if (!pre.is_object()) throw ConfigError("prefill", "must be an object");
  c.prefill.saturation_ms = require_number(
      pre.value("saturation_ms", json(c.prefill.saturation_ms)),
      "prefill.saturation_ms", true);
  c.prefill.max_tokens = static_cast<int>(require_int(
      pre.value("max_tokens", json(c.prefill.max_tokens)),
      "prefill.max_tokens", 1));
  c.prefill.stage_bw = require_number(
      pre.value("stage_bw_bytes_per_ms", json(c.prefill.stage_bw)),
      "prefill.stage_bw_bytes_per_ms", true);
  c.prefill.boundary_latency_ms = require_number(
      pre.value("boundary_latency_ms", json(c.prefill.boundary_latency_ms)),
      "prefill.boundary_latency_ms", false);
  c.prefill.guard_ms =
      require_number(pre.value("guard_ms", json(c.prefill.guard_ms)),
                     "prefill.guard_ms", false);
  c.prefill.memory_budget_bytes = require_int(
      pre.value("memory_budget_bytes", json(c.prefill.memory_budget_bytes)),
      "prefill.memory_budget_bytes", 1);
  c.prefill.inference_layers = static_cast<int>(require_int(
      pre.value("inference_layers", json(c.prefill.inference_layers)),
      "prefill.inference_layers", 1));
  c.prefill.inference_hidden = require_int(
      pre.value("inference_hidden", json(c.prefill.inference_hidden)),
      "prefill.inference_hidden", 1);
  if (pre.contains("inference_params_per_layer")) {
    c.prefill.inference_params_per_layer =
        require_number(pre["inference_params_per_layer"],
                       "prefill.inference_params_per_layer", false);
  }
  c.prefill.bytes_per_element = static_cast<int>(require_int(
      pre.value("bytes_per_element", json(c.prefill.bytes_per_element)),
      "prefill.bytes_per_element", 1));
  if (pre.contains("requests_csv")) {
    if (!pre["requests_csv"].is_string()) {
      throw ConfigError("prefill.requests_csv", "must be a path string");
    }
    c.requests_csv_path = pre["requests_csv"].get<std::string>();
  }
  if (pre.contains("synthetic")) {
    const json& syn = pre["synthetic"];
    if (!syn.is_object() || !syn.contains("count")) {
      throw ConfigError("prefill.synthetic",
                        "must be an object with a count");
    }
    c.synthetic_count = static_cast<int>(
        require_int(syn["count"], "prefill.synthetic.count", 0));
    if (syn.contains("seed")) {
      c.seed = static_cast<unsigned>(
          require_int(syn["seed"], "prefill.synthetic.seed", 0));
    }
  }
  if (pre.contains("saturating") && !pre["saturating"].is_boolean()) {
    throw ConfigError("prefill.saturating", "must be a boolean");
  }
  c.saturating = pre.value("saturating", false);
  if (c.requests_csv_path && (c.synthetic_count || c.saturating)) {
    throw ConfigError("prefill", "give only one request source");
  }
  if (c.synthetic_count && c.saturating) {
    throw ConfigError("prefill", "give only one request source");
  }
  return c;
}

json parse_document(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  return doc;
}

}  // namespace

RunConfig load_run_config(const std::string& config_text) {
  json doc = parse_document(config_text);
  return parse_run_config(doc, config_text);
}

RunConfig load_run_config_file(const std::string& path) {
  return load_run_config(read_text_file(path));
}

std::vector<std::pair<std::string, RunConfig>> expand_scenarios(
    const std::string& config_text) {
  json doc = parse_document(config_text);
  json base = doc;
  base.erase("scenarios");
  std::vector<std::pair<std::string, RunConfig>> out;
  if (!doc.contains("scenarios")) {
    out.emplace_back("base", parse_run_config(base, base.dump()));
    return out;
  }
  if (!doc["scenarios"].is_array() || doc["scenarios"].empty()) {
    throw ConfigError("scenarios", "must be a non-empty list");
  }
  for (size_t i = 0; i < doc["scenarios"].size(); ++i) {
    const json& s = doc["scenarios"][i];
    const std::string path = "scenarios[" + std::to_string(i) + "]";
    if (!s.is_object()) throw ConfigError(path, "must be an object");
    std::string name = s.value("name", "s" + std::to_string(i));
    if (!s.contains("patch") || !s["patch"].is_object()) {
      throw ConfigError(path + ".patch", "required object");
    }
    json merged = base;
    merged.merge_patch(s["patch"]);
    try {
      out.emplace_back(name, parse_run_config(merged, merged.dump()));
    } catch (const ConfigError& e) {
      throw ConfigError(path, e.what());
    }
  }
  return out;
}

SelectionInput selection_input(const RunConfig& config) {
  SelectionInput in;
  in.topo = config.topo;
  in.model = config.model;
  in.profile = config.profile;
  in.pipelines_per_cell = config.select_pipelines_per_cell > 0
                              ? config.select_pipelines_per_cell
                              : config.pipelines_per_cell;
  in.tp_degree =
      config.select_tp_degree > 0 ? config.select_tp_degree : config.tp_degree;
  in.d_max = config.select_d_max;
  in.dc_order = config.select_dc_order.empty() ? config.dc_order
                                               : config.select_dc_order;
  in.policy = config.select_policy;
  in.sched = config.sched;
  return in;
}

std::vector<PrefillRequest> parse_requests_csv(const std::string& text) {
  std::vector<PrefillRequest> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.empty()) continue;
    if (line_no == 1 && line.find("id") == 0) continue;  // header row
    std::istringstream row(line);
    std::string id_s, arr_s, tok_s;
    if (!std::getline(row, id_s, ',') || !std::getline(row, arr_s, ',') ||
        !std::getline(row, tok_s, ',')) {
      throw ConfigError("requests_csv:line " + std::to_string(line_no),
                        "expected id,arrival_ms,tokens");
    }
    try {
      PrefillRequest r;
      r.id = std::stoi(id_s);
      r.arrival_ms = std::stod(arr_s);
      r.tokens = std::stoi(tok_s);
      r.model_id = "default";
      out.push_back(r);
    } catch (const std::exception&) {
      throw ConfigError("requests_csv:line " + std::to_string(line_no),
                        "expected id,arrival_ms,tokens");
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PrefillRequest& a, const PrefillRequest& b) {
                     return a.arrival_ms < b.arrival_ms;
                   });
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("config", "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace geopipe
