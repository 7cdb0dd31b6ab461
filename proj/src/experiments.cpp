#include "qac/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "qac/metrics.hpp"

namespace qac {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& field,
                               const std::string& what) {
  throw std::invalid_argument("config field \"" + field + "\": " + what);
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& scope) {
  for (const auto& item : j.items()) {
    const bool known = std::any_of(
        allowed.begin(), allowed.end(),
        [&](const char* name) { return item.key() == name; });
    if (!known)
      throw std::invalid_argument("config: unknown field \"" + scope +
                                  item.key() + "\"");
  }
}

std::int64_t get_int64(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) {
    const std::uint64_t u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      config_error(field, "integer out of range");
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  config_error(field, "expected an integer");
}

std::uint64_t get_uint64(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  config_error(field, "expected a nonnegative integer");
}

int get_int_range(const json& v, const std::string& field, std::int64_t lo,
                  std::int64_t hi) {
  const std::int64_t value = get_int64(v, field);
  if (value < lo || value > hi)
    config_error(field, "must be in [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
  return static_cast<int>(value);
}

double get_double(const json& v, const std::string& field) {
  if (v.is_number()) return v.get<double>();
  config_error(field, "expected a number");
}

bool get_bool(const json& v, const std::string& field) {
  if (v.is_boolean()) return v.get<bool>();
  config_error(field, "expected a boolean");
}

std::string get_string(const json& v, const std::string& field) {
  if (v.is_string()) return v.get<std::string>();
  config_error(field, "expected a string");
}

Digraph get_digraph(const json& v, const std::string& field) {
  if (!v.is_object()) config_error(field, "expected a digraph object");
  try {
    return digraph_from_json(v.dump());
  } catch (const std::exception& err) {
    config_error(field, err.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file \"" + path + "\"");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void parse_topology(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) config_error("topology", "expected an object");
  reject_unknown_keys(
      j, {"mode", "window_l", "duplication_prob", "members", "probabilities"},
      "topology.");
  if (!j.contains("mode")) config_error("topology.mode", "missing");
  try {
    cfg.mode = topology_mode_from_string(get_string(j.at("mode"), "topology.mode"));
  } catch (const std::invalid_argument& err) {
    config_error("topology.mode", err.what());
  }
  switch (cfg.mode) {
    case TopologyMode::Static:
      reject_unknown_keys(j, {"mode"}, "topology.");
      break;
    case TopologyMode::WindowUnion:
      reject_unknown_keys(j, {"mode", "window_l", "duplication_prob"},
                          "topology.");
      if (!j.contains("window_l")) config_error("topology.window_l", "missing");
      cfg.window_l = get_int_range(j.at("window_l"), "topology.window_l", 1,
                                   1'000'000);
      if (j.contains("duplication_prob")) {
        cfg.duplication_prob =
            get_double(j.at("duplication_prob"), "topology.duplication_prob");
        if (cfg.duplication_prob < 0.0 || cfg.duplication_prob > 1.0)
          config_error("topology.duplication_prob", "must be in [0, 1]");
      }
      break;
    case TopologyMode::IidCollection: {
      reject_unknown_keys(j, {"mode", "members", "probabilities"}, "topology.");
      if (!j.contains("members") || !j.at("members").is_array() ||
          j.at("members").empty())
        config_error("topology.members", "expected a nonempty digraph array");
      int index = 0;
      for (const json& member : j.at("members"))
        cfg.members.push_back(get_digraph(
            member, "topology.members[" + std::to_string(index++) + "]"));
      if (!j.contains("probabilities") || !j.at("probabilities").is_array())
        config_error("topology.probabilities", "expected a number array");
      for (const json& p : j.at("probabilities"))
        cfg.probabilities.push_back(get_double(p, "topology.probabilities"));
      break;
    }
  }
}

void parse_initial(const json& j, ExperimentConfig& cfg) {
  if (!j.is_object()) config_error("initial", "expected an object");
  reject_unknown_keys(j, {"values", "uniform"}, "initial.");
  const bool has_values = j.contains("values");
  const bool has_uniform = j.contains("uniform");
  if (has_values == has_uniform)
    config_error("initial", "expected exactly one of \"values\", \"uniform\"");
  if (has_values) {
    const json& values = j.at("values");
    if (!values.is_array() || values.empty())
      config_error("initial.values", "expected a nonempty integer array");
    std::vector<std::int64_t> y0;
    for (const json& v : values) y0.push_back(get_int64(v, "initial.values"));
    cfg.initial_values = std::move(y0);
  } else {
    const json& range = j.at("uniform");
    if (!range.is_array() || range.size() != 2)
      config_error("initial.uniform", "expected [lo, hi]");
    const std::int64_t lo = get_int64(range.at(0), "initial.uniform");
    const std::int64_t hi = get_int64(range.at(1), "initial.uniform");
    if (lo > hi) config_error("initial.uniform", "lo must be <= hi");
    cfg.initial_uniform = std::make_pair(lo, hi);
  }
}

/**
 * Default horizon 10 * k0_bound(p0 = 0.9): long enough that hitting it means
 * something is wrong, not that the run was slow. Saturated multiplication,
 * floor of 1000 rounds so tiny instances still get a meaningful horizon.
 */
std::int64_t default_max_rounds(int n, int d_plus_max,
                                const std::vector<std::int64_t>& y0) {
  const std::uint64_t k0 =
      k0_bound(n, std::max(d_plus_max, 1), y_init(y0), 0.9);
  const std::uint64_t cap =
      static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()) / 10;
  const std::int64_t horizon = 10 * static_cast<std::int64_t>(std::min(k0, cap));
  return std::max<std::int64_t>(horizon, 1000);
}

ExperimentSummary summarize(const std::vector<TrialRecord>& records) {
  ExperimentSummary s;
  s.trials = static_cast<int>(records.size());
  std::vector<std::int64_t> conv, stab;
  for (const TrialRecord& rec : records) {
    if (rec.failure) ++s.failed;
    if (rec.converged) ++s.converged;
    if (rec.convergence_round) conv.push_back(*rec.convergence_round);
    if (rec.stabilization_round) stab.push_back(*rec.stabilization_round);
  }
  auto stats = [](std::vector<std::int64_t>& values, std::optional<double>& mean,
                  std::optional<double>& median,
                  std::optional<std::int64_t>& max) {
    if (values.empty()) return;
    std::sort(values.begin(), values.end());
    double sum = 0;
    for (std::int64_t v : values) sum += static_cast<double>(v);
    mean = sum / static_cast<double>(values.size());
    const std::size_t mid = values.size() / 2;
    median = values.size() % 2 == 1
                 ? static_cast<double>(values[mid])
                 : (static_cast<double>(values[mid - 1]) +
                    static_cast<double>(values[mid])) /
                       2.0;
    max = values.back();
  };
  stats(conv, s.convergence_mean, s.convergence_median, s.convergence_max);
  stats(stab, s.stabilization_mean, s.stabilization_median, s.stabilization_max);
  return s;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("config: not valid JSON: ") +
                                err.what());
  }
  if (!j.is_object())
    throw std::invalid_argument("config: expected a JSON object");
  reject_unknown_keys(j,
                      {"name", "variant", "trials", "seed", "max_rounds",
                       "stability_window", "run_to_max_rounds", "graph",
                       "graph_file", "graph_generator", "topology", "initial",
                       "choices_file", "output_csv", "output_trace"},
                      "");

  ExperimentConfig cfg;
  if (j.contains("name")) cfg.name = get_string(j.at("name"), "name");
  if (j.contains("variant")) {
    try {
      cfg.variant = variant_from_string(get_string(j.at("variant"), "variant"));
    } catch (const std::invalid_argument& err) {
      config_error("variant", err.what());
    }
  }
  if (j.contains("trials"))
    cfg.trials = get_int_range(j.at("trials"), "trials", 1, 100'000'000);
  if (!j.contains("seed")) config_error("seed", "missing");
  cfg.seed = get_uint64(j.at("seed"), "seed");
  if (j.contains("max_rounds")) {
    cfg.max_rounds = get_int64(j.at("max_rounds"), "max_rounds");
    if (*cfg.max_rounds < 1) config_error("max_rounds", "must be >= 1");
  }
  if (j.contains("stability_window")) {
    cfg.stability_window =
        get_int64(j.at("stability_window"), "stability_window");
    if (cfg.stability_window < 0)
      config_error("stability_window", "must be >= 0 (0 = default of 2n)");
  }
  if (j.contains("run_to_max_rounds"))
    cfg.run_to_max_rounds =
        get_bool(j.at("run_to_max_rounds"), "run_to_max_rounds");

  if (j.contains("graph")) cfg.graph = get_digraph(j.at("graph"), "graph");
  if (j.contains("graph_file"))
    cfg.graph_file = get_string(j.at("graph_file"), "graph_file");
  if (j.contains("graph_generator")) {
    const json& g = j.at("graph_generator");
    if (!g.is_object()) config_error("graph_generator", "expected an object");
    reject_unknown_keys(g, {"n", "density", "per_trial"}, "graph_generator.");
    GraphGeneratorSpec spec;
    if (!g.contains("n")) config_error("graph_generator.n", "missing");
    spec.n = get_int_range(g.at("n"), "graph_generator.n", 2, 1'000'000);
    if (!g.contains("density")) config_error("graph_generator.density", "missing");
    spec.density = get_double(g.at("density"), "graph_generator.density");
    if (spec.density < 0.0 || spec.density > 1.0)
      config_error("graph_generator.density", "must be in [0, 1]");
    if (g.contains("per_trial"))
      spec.per_trial = get_bool(g.at("per_trial"), "graph_generator.per_trial");
    cfg.generator = spec;
  }

  if (j.contains("topology")) parse_topology(j.at("topology"), cfg);

  if (!j.contains("initial")) config_error("initial", "missing");
  parse_initial(j.at("initial"), cfg);

  if (j.contains("choices_file")) {
    cfg.choices_file = get_string(j.at("choices_file"), "choices_file");
    if (cfg.trials != 1)
      config_error("choices_file", "scripted choices require trials = 1");
  }
  if (j.contains("output_csv"))
    cfg.output_csv = get_string(j.at("output_csv"), "output_csv");
  if (j.contains("output_trace"))
    cfg.output_trace = get_string(j.at("output_trace"), "output_trace");

  const int graph_sources = (cfg.graph ? 1 : 0) + (cfg.graph_file ? 1 : 0) +
                            (cfg.generator ? 1 : 0);
  if (cfg.mode == TopologyMode::IidCollection) {
    if (graph_sources != 0)
      config_error("graph",
                   "iid_collection mode takes its digraphs from "
                   "topology.members; remove graph/graph_file/graph_generator");
  } else if (graph_sources != 1) {
    config_error("graph",
                 "expected exactly one of graph, graph_file, graph_generator");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  ExperimentConfig cfg = parse_experiment_config(read_text_file(path));
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto resolve = [&dir](std::optional<std::string>& p) {
    if (p && !p->empty() && std::filesystem::path(*p).is_relative())
      *p = (dir / *p).string();
  };
  resolve(cfg.graph_file);
  resolve(cfg.choices_file);
  return cfg;
}

std::vector<ScriptedChoice> parse_scripted_choices(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw std::invalid_argument(std::string("choices: not valid JSON: ") +
                                err.what());
  }
  if (!j.is_array()) throw std::invalid_argument("choices: expected an array");
  std::vector<ScriptedChoice> choices;
  int index = 0;
  for (const json& entry : j) {
    const std::string scope = "choices[" + std::to_string(index++) + "]";
    if (!entry.is_object()) config_error(scope, "expected an object");
    reject_unknown_keys(entry, {"k", "node", "piece", "target"}, scope + ".");
    ScriptedChoice c;
    for (const char* key : {"k", "node", "piece", "target"})
      if (!entry.contains(key)) config_error(scope + "." + key, "missing");
    c.round = get_int64(entry.at("k"), scope + ".k");
    if (c.round < 0) config_error(scope + ".k", "must be >= 0");
    c.node = get_int_range(entry.at("node"), scope + ".node", 0, 1'000'000'000);
    c.piece = get_int_range(entry.at("piece"), scope + ".piece", 0,
                            1'000'000'000);
    c.target = get_int_range(entry.at("target"), scope + ".target", 0,
                             1'000'000'000);
    choices.push_back(c);
  }
  return choices;
}

std::string to_string(const ExperimentSummary& s) {
  std::ostringstream out;
  out << "trials: " << s.trials << ", converged: " << s.converged
      << ", failed: " << s.failed << "\n";
  auto line = [&out](const char* label, const std::optional<double>& mean,
                     const std::optional<double>& median,
                     const std::optional<std::int64_t>& max) {
    out << label << ": ";
    if (!mean) {
      out << "n/a\n";
      return;
    }
    char buffer[128];
    std::snprintf(buffer, sizeof(buffer), "mean %.2f, median %.1f, max %lld",
                  *mean, *median, static_cast<long long>(*max));
    out << buffer << "\n";
  };
  line("convergence round", s.convergence_mean, s.convergence_median,
       s.convergence_max);
  line("stabilization round", s.stabilization_mean, s.stabilization_median,
       s.stabilization_max);
  return out.str();
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers) {
  TopologySchedule iid_schedule;
  Digraph base_nominal;
  int n = 0;
  const bool per_trial_graph = cfg.generator && cfg.generator->per_trial;

  if (cfg.mode == TopologyMode::IidCollection) {
    iid_schedule = TopologySchedule::iid_collection(cfg.members,
                                                    cfg.probabilities);
    n = iid_schedule.nominal.n;
  } else if (cfg.graph) {
    base_nominal = *cfg.graph;
    n = base_nominal.n;
  } else if (cfg.graph_file) {
    base_nominal = digraph_from_json(read_text_file(*cfg.graph_file));
    n = base_nominal.n;
  } else {
    n = cfg.generator->n;
    if (!per_trial_graph)
      base_nominal = random_strongly_connected(cfg.generator->n,
                                               cfg.generator->density,
                                               derive_seed(cfg.seed, 2, 0));
  }

  std::vector<std::int64_t> y0;
  if (cfg.initial_values) {
    if (static_cast<int>(cfg.initial_values->size()) != n) {
      std::ostringstream msg;
      msg << "has " << cfg.initial_values->size() << " entries but the digraph"
          << " has " << n << " nodes";
      config_error("initial.values", msg.str());
    }
    y0 = *cfg.initial_values;
  } else {
    // Sampled once and reused by every trial of the batch.
    const auto [lo, hi] = *cfg.initial_uniform;
    Xoshiro256StarStar rng(derive_seed(cfg.seed, 1, 0));
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    y0.reserve(n);
    for (int i = 0; i < n; ++i)
      y0.push_back(lo + static_cast<std::int64_t>(rng.uniform_below(span)));
  }

  std::vector<TrialConfig> trial_configs;
  trial_configs.reserve(cfg.trials);
  for (int t = 0; t < cfg.trials; ++t) {
    TrialConfig tc;
    switch (cfg.mode) {
      case TopologyMode::Static:
        tc.schedule = TopologySchedule::static_graph(
            per_trial_graph
                ? random_strongly_connected(cfg.generator->n,
                                            cfg.generator->density,
                                            derive_seed(cfg.seed, 2, t))
                : base_nominal);
        break;
      case TopologyMode::WindowUnion:
        tc.schedule = TopologySchedule::window_union(
            per_trial_graph
                ? random_strongly_connected(cfg.generator->n,
                                            cfg.generator->density,
                                            derive_seed(cfg.seed, 2, t))
                : base_nominal,
            cfg.window_l, cfg.duplication_prob);
        break;
      case TopologyMode::IidCollection:
        tc.schedule = iid_schedule;
        break;
    }
    tc.y0 = y0;
    tc.variant = cfg.variant;
    tc.seed = cfg.seed ^ static_cast<std::uint64_t>(t);
    tc.options.max_rounds =
        cfg.max_rounds ? *cfg.max_rounds
                       : default_max_rounds(
                             n, tc.schedule.nominal.max_out_degree(), y0);
    tc.options.stability_window = cfg.stability_window;
    tc.options.topology_seed = derive_seed(cfg.seed, 3, t);
    tc.options.collect_trace = cfg.output_trace.has_value();
    tc.options.run_to_max_rounds = cfg.run_to_max_rounds;
    trial_configs.push_back(std::move(tc));
  }

  ExperimentResult result;
  if (cfg.choices_file) {
    const std::vector<ScriptedChoice> choices =
        parse_scripted_choices(read_text_file(*cfg.choices_file));
    const TrialConfig& tc = trial_configs.front();
    TrialRecord rec;
    try {
      rec = run_trial(tc.schedule, tc.y0, tc.variant,
                      RandomSource::scripted(choices, tc.seed), tc.options);
    } catch (const std::exception& err) {
      rec = TrialRecord{};
      rec.n = tc.schedule.nominal.n;
      rec.variant = tc.variant;
      rec.mode = tc.schedule.mode;
      rec.failure = err.what();
    }
    rec.seed = tc.seed;
    result.records.push_back(std::move(rec));
  } else {
    result.records = run_batch(trial_configs, workers);
  }
  result.summary = summarize(result.records);
  return result;
}

std::string records_to_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << "trial_id,n,variant,mode,seed,converged,convergence_round,"
         "stabilization_round\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const TrialRecord& rec = records[i];
    out << i << ',' << rec.n << ',' << to_string(rec.variant) << ','
        << to_string(rec.mode) << ',' << rec.seed << ','
        << (rec.converged ? "true" : "false") << ',';
    if (rec.convergence_round) out << *rec.convergence_round;
    out << ',';
    if (rec.stabilization_round) out << *rec.stabilization_round;
    out << '\n';
  }
  return out.str();
}

std::string records_to_trace_jsonl(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  for (std::size_t t = 0; t < records.size(); ++t) {
    for (const RoundSnapshot& row : records[t].trace) {
      json o;
      o["trial"] = t;
      o["k"] = row.k;
      o["y"] = row.y;
      o["z"] = row.z;
      o["y_s"] = row.y_s;
      o["z_s"] = row.z_s;
      o["q_s"] = row.q_s;
      o["held_y"] = row.held_y;
      o["held_z"] = row.held_z;
      o["inflight_y"] = row.inflight_y;
      o["inflight_z"] = row.inflight_z;
      o["grouped_Y1"] = row.grouped.Y1;
      o["grouped_Y2"] = row.grouped.Y2;
      o["grouped_Y"] = row.grouped.Y;
      o["token_Y1"] = row.token.Y1;
      o["token_Y2"] = row.token.Y2;
      o["token_Y"] = row.token.Y;
      o["all_in_target"] = row.all_in_target;
      out << o.dump() << '\n';
    }
  }
  return out.str();
}

void write_experiment_outputs(const ExperimentConfig& cfg,
                              const ExperimentResult& result) {
  auto write_file = [](const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file \"" + path + "\"");
    out << content;
  };
  if (cfg.output_csv) write_file(*cfg.output_csv, records_to_csv(result.records));
  if (cfg.output_trace)
    write_file(*cfg.output_trace, records_to_trace_jsonl(result.records));
}

}  // namespace qac
