#include "bmdp/batch.hpp"

#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "bmdp/analysis.hpp"
#include "bmdp/envs.hpp"
#include "bmdp/errors.hpp"
#include "json.hpp"

namespace bmdp {

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + key + "' has the wrong type");
  }
}

EnvSpec parse_env(const json& j) {
  EnvSpec e;
  e.kind = field<std::string>(j, "kind", e.kind);
  if (e.kind != "random_block" && e.kind != "lock" && e.kind != "file")
    throw ConfigError("env.kind must be random_block, lock, or file");
  e.H = field<int>(j, "H", e.H);
  e.S = field<int>(j, "S", e.S);
  e.A = field<int>(j, "A", e.A);
  e.X = field<int>(j, "X", e.X);
  e.min_reach = field<double>(j, "min_reach", e.min_reach);
  e.noise = field<double>(j, "noise", e.noise);
  e.emissions_per_state = field<int>(j, "emissions_per_state", e.emissions_per_state);
  e.decoys = field<int>(j, "decoys", e.decoys);
  e.path = field<std::string>(j, "path", e.path);
  if (e.kind == "file" && e.path.empty()) throw ConfigError("env.path required when env.kind is file");
  return e;
}

PracticalOverrides parse_params(const json& j) {
  PracticalOverrides p;
  if (j.contains("m")) p.m = j.at("m").get<int>();
  if (j.contains("n")) p.n = j.at("n").get<int>();
  if (j.contains("rounds")) p.rounds = j.at("rounds").get<int>();
  if (j.contains("N")) p.N = j.at("N").get<long>();
  if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
  if (j.contains("gamma_sep")) p.gamma_sep = j.at("gamma_sep").get<double>();
  if (j.contains("eps_reg")) p.eps_reg = j.at("eps_reg").get<double>();
  if (j.contains("delta_reg")) p.delta_reg = j.at("delta_reg").get<double>();
  if (j.contains("tau")) p.tau = j.at("tau").get<double>();
  if (j.contains("tau_small")) p.tau_small = j.at("tau_small").get<double>();
  return p;
}

}  // namespace

BatchConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  BatchConfig cfg;
  cfg.seed = field<std::uint64_t>(j, "seed", 0);
  cfg.out_dir = field<std::string>(j, "out_dir", "");
  cfg.jobs = field<int>(j, "jobs", 1);
  if (cfg.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!j.contains("runs")) return cfg;
  if (!j.at("runs").is_array()) throw ConfigError("runs must be an array");
  for (const auto& rj : j.at("runs")) {
    RunSpec r;
    r.name = field<std::string>(rj, "name", "run" + std::to_string(cfg.runs.size()));
    if (rj.contains("env")) r.env = parse_env(rj.at("env"));
    r.algorithm = field<std::string>(rj, "algorithm", r.algorithm);
    if (r.algorithm != "pco" && r.algorithm != "pcr")
      throw ConfigError("algorithm must be pco or pcr");
    r.oracle = field<std::string>(rj, "oracle", r.oracle);
    if (r.oracle != "erm" && r.oracle != "bayes") throw ConfigError("oracle must be erm or bayes");
    if (rj.contains("params")) {
      r.param_mode = field<std::string>(rj.at("params"), "mode", r.param_mode);
      if (r.param_mode != "practical" && r.param_mode != "theory")
        throw ConfigError("params.mode must be practical or theory");
      if (r.param_mode == "theory")
        throw ConfigError(
            "params.mode=theory is descriptive only (its tolerances underflow doubles); use "
            "'bmdp_cli params' to inspect it and practical mode to run");
      r.params = parse_params(rj.at("params"));
      r.reset_dataset_mode = field<std::string>(rj.at("params"), "reset_dataset_mode", r.reset_dataset_mode);
      if (r.reset_dataset_mode != "independent" && r.reset_dataset_mode != "shared")
        throw ConfigError("params.reset_dataset_mode must be independent or shared");
    }
    if (rj.contains("check")) r.check_epsilon = field<double>(rj.at("check"), "epsilon", r.check_epsilon);
    if (rj.contains("seeds")) {
      r.seed_base = field<std::uint64_t>(rj.at("seeds"), "base", 0);
      r.seed_count = field<int>(rj.at("seeds"), "count", 1);
      if (r.seed_count < 1) throw ConfigError("seeds.count must be >= 1");
    }
    cfg.runs.push_back(std::move(r));
  }
  return cfg;
}

BatchConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

struct RunDetail {
  RunOutcome outcome;
  json resolved_params;
  json diagnostics;
  json worst_entries;
  const RunSpec* spec = nullptr;
};

GeneratedEnv build_env(const EnvSpec& e, std::uint64_t seed) {
  if (e.kind == "lock") return make_lock(e.H, e.A, e.noise, e.emissions_per_state, seed, e.decoys);
  if (e.kind == "random_block")
    return make_random_block(e.H, e.S, e.A, e.X, e.min_reach, seed, e.decoys);
  BlockMdp mdp = load_env_file(e.path);
  GeneratedEnv g;
  g.concepts = mdp.concept_class_handle();
  if (!g.concepts) throw ConfigError("env file " + e.path + " carries no concept class");
  g.mdp = std::move(mdp);
  return g;
}

json diagnostics_to_json(const ExploreDiagnostics& diag) {
  json rounds = json::array();
  for (const auto& r : diag.rounds) {
    json layers = json::array();
    for (const auto& l : r.layers) {
      int accepted = 0;
      for (const auto& c : l.centers) accepted += c.accepted ? 1 : 0;
      layers.push_back({{"layer", l.layer},
                        {"psi_size", l.psi_size},
                        {"accepted_centers", accepted},
                        {"centers_drawn", static_cast<int>(l.centers.size())},
                        {"samples_used", l.episodes_used}});
    }
    rounds.push_back({{"round", r.round}, {"psi_sizes", r.psi_sizes}, {"layers", std::move(layers)}});
  }
  return json{{"rounds", std::move(rounds)}};
}

RunDetail execute_run(const RunSpec& spec, std::uint64_t seed) {
  RunDetail detail;
  detail.spec = &spec;
  detail.outcome.name = spec.name;
  detail.outcome.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    GeneratedEnv env = build_env(spec.env, seed);
    Prng rng = Prng(seed).child("run");
    ExploreDiagnostics diag;
    PolicySet psi;
    const int S_count = env.mdp.num_states();

    if (spec.algorithm == "pco") {
      PcoParams params = pco_params_practical(S_count, env.mdp.horizon(), env.mdp.num_actions(), spec.params);
      detail.resolved_params = {{"mode", "practical"},
                                {"m", params.config.layer.m},
                                {"n", params.config.layer.n},
                                {"N", params.config.layer.N},
                                {"gamma", params.config.layer.gamma_tol},
                                {"gamma_sep", params.config.layer.gamma_sep},
                                {"rounds", params.config.rounds},
                                {"eps_reg", params.config.layer.eps_reg},
                                {"delta_reg", params.config.layer.delta_reg},
                                {"tau", params.tau},
                                {"tau_small", params.tau_small}};
      TwoContextOracle reg2 = spec.oracle == "erm" ? make_erm_two_oracle(*env.concepts)
                                                   : make_bayes_two_oracle(env.mdp);
      EpisodicAccess access(env.mdp, rng.child("access"));
      psi = pco(reg2, S_count, params.config, access, rng.child("pco"), &diag);
      detail.outcome.episodes = access.episodes_used();
    } else {
      PcrParams params = pcr_params_practical(S_count, env.mdp.horizon(), env.mdp.num_actions(), spec.params);
      params.config.layer.mode = spec.reset_dataset_mode == "shared" ? DiscriminatorMode::shared
                                                                     : DiscriminatorMode::independent;
      detail.resolved_params = {{"mode", "practical"},
                                {"m", params.config.layer.m},
                                {"n", params.config.layer.n},
                                {"N", params.config.layer.N},
                                {"gamma", params.config.layer.gamma_tol},
                                {"gamma_sep", params.config.layer.gamma_sep},
                                {"rounds", params.config.rounds},
                                {"eps_reg", params.config.layer.eps_reg},
                                {"delta_reg", params.config.layer.delta_reg},
                                {"tau", params.tau},
                                {"tau_small", params.tau_small},
                                {"reset_dataset_mode", spec.reset_dataset_mode}};
      OneContextOracle reg1 = spec.oracle == "erm" ? make_erm_one_oracle(*env.concepts)
                                                   : make_bayes_one_oracle(env.mdp);
      ResetAccess access(env.mdp, rng.child("access"));
      psi = pcr(reg1, S_count, params.config, access, rng.child("pcr"), &diag);
      detail.outcome.episodes = access.episodes_used();
      detail.outcome.reset_queries = access.queries_used();
    }

    CoverReport cover = check_cover(env.mdp, psi, spec.check_epsilon);
    detail.outcome.ok = true;
    detail.outcome.cover_pass = cover.pass;
    detail.outcome.psi_size = static_cast<int>(psi.size());
    detail.outcome.worst_deficit = cover.worst_deficit();
    detail.diagnostics = diagnostics_to_json(diag);
    json worst = json::array();
    for (const auto& e : cover.entries)
      if (!e.pass)
        worst.push_back({{"layer", e.layer}, {"state", e.state}, {"achieved", e.achieved},
                         {"optimal", e.optimal}, {"deficit", e.deficit}});
    detail.worst_entries = std::move(worst);
  } catch (const std::exception& e) {
    detail.outcome.ok = false;
    detail.outcome.error = e.what();
  }
  detail.outcome.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return detail;
}

json field_semantics() {
  return json{
      {"seed", {{"units", "none"}, {"semantics", "master PRNG seed"}}},
      {"version", {{"units", "none"}, {"semantics", "report schema version"}}},
      {"jobs", {{"units", "count"}, {"semantics", "concurrent runs requested"}}},
      {"H", {{"units", "layers"}, {"semantics", "horizon"}}},
      {"S", {{"units", "count"}, {"semantics", "latent states"}}},
      {"A", {{"units", "count"}, {"semantics", "actions"}}},
      {"X", {{"units", "count"}, {"semantics", "observations"}}},
      {"min_reach", {{"units", "probability"}, {"semantics", "reachability floor of the generator"}}},
      {"noise", {{"units", "probability"}, {"semantics", "lock slip probability"}}},
      {"emissions_per_state", {{"units", "count"}, {"semantics", "observations per latent state"}}},
      {"decoys", {{"units", "count"}, {"semantics", "decoy decoders in the concept class"}}},
      {"m", {{"units", "count"}, {"semantics", "test/discriminator observations per layer"}}},
      {"n", {{"units", "count"}, {"semantics", "candidate cluster centers per layer"}}},
      {"N", {{"units", "samples"}, {"semantics", "samples per regression"}}},
      {"gamma", {{"units", "none"}, {"semantics", "reward sharpness tolerance"}}},
      {"gamma_sep", {{"units", "none"}, {"semantics", "center acceptance separation"}}},
      {"rounds", {{"units", "count"}, {"semantics", "outer discovery rounds"}}},
      {"eps_reg", {{"units", "none"}, {"semantics", "tolerance forwarded to the regression oracle"}}},
      {"delta_reg", {{"units", "none"}, {"semantics", "failure budget forwarded to the regression oracle"}}},
      {"tau", {{"units", "probability"}, {"semantics", "truncation reachability threshold"}}},
      {"tau_small", {{"units", "probability"}, {"semantics", "backup-mixture rescue threshold"}}},
      {"check_epsilon", {{"units", "probability"}, {"semantics", "cover slack epsilon"}}},
      {"psi_size", {{"units", "count"}, {"semantics", "policies in the returned cover"}}},
      {"worst_deficit", {{"units", "probability"}, {"semantics", "largest optimal-minus-achieved gap"}}},
      {"episodes", {{"units", "count"}, {"semantics", "episodes consumed"}}},
      {"reset_queries", {{"units", "count"}, {"semantics", "reset oracle queries consumed"}}},
      {"wall_ms", {{"units", "milliseconds"}, {"semantics", "wall-clock run time"}}},
      {"layer", {{"units", "index"}, {"semantics", "layer h (1-based)"}}},
      {"state", {{"units", "index"}, {"semantics", "latent state"}}},
      {"achieved", {{"units", "probability"}, {"semantics", "best visitation over the returned cover"}}},
      {"optimal", {{"units", "probability"}, {"semantics", "best visitation over all policies"}}},
      {"deficit", {{"units", "probability"}, {"semantics", "optimal minus achieved"}}},
      {"round", {{"units", "index"}, {"semantics", "outer round (1-based)"}}},
      {"psi_sizes", {{"units", "count"}, {"semantics", "per-layer cover sizes this round"}}},
      {"accepted_centers", {{"units", "count"}, {"semantics", "cluster centers accepted"}}},
      {"centers_drawn", {{"units", "count"}, {"semantics", "candidate centers drawn"}}},
      {"samples_used", {{"units", "count"}, {"semantics", "episodes or reset queries consumed by the layer"}}},
      {"run_count", {{"units", "count"}, {"semantics", "runs executed"}}},
      {"pass_count", {{"units", "count"}, {"semantics", "runs whose cover check passed"}}},
      {"fail_count", {{"units", "count"}, {"semantics", "runs failed or not passing"}}},
      {"pass_rate", {{"units", "fraction"}, {"semantics", "pass_count / run_count"}}},
      {"seed_base", {{"units", "none"}, {"semantics", "first per-run seed"}}},
      {"seed_count", {{"units", "count"}, {"semantics", "seeds per run spec"}}},
  };
}

}  // namespace

BatchOutcome run_batch(const BatchConfig& config) {
  struct Job {
    const RunSpec* spec;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& spec : config.runs)
    for (int i = 0; i < spec.seed_count; ++i)
      jobs.push_back({&spec, config.seed + spec.seed_base + static_cast<std::uint64_t>(i)});

  std::vector<RunDetail> details(jobs.size());
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(jobs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) details[i] = execute_run(*jobs[i].spec, jobs[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        details[i] = execute_run(*jobs[i].spec, jobs[i].seed);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BatchOutcome out;
  json runs = json::array();
  for (const auto& d : details) {
    out.runs.push_back(d.outcome);
    const bool pass = d.outcome.ok && d.outcome.cover_pass;
    if (pass)
      ++out.pass_count;
    else
      ++out.fail_count;
    const RunSpec& spec = *d.spec;
    json run = {
        {"name", d.outcome.name},
        {"seed", d.outcome.seed},
        {"algorithm", spec.algorithm},
        {"oracle", spec.oracle},
        {"env",
         {{"kind", spec.env.kind}, {"H", spec.env.H}, {"S", spec.env.S}, {"A", spec.env.A},
          {"X", spec.env.X}, {"min_reach", spec.env.min_reach}, {"noise", spec.env.noise},
          {"emissions_per_state", spec.env.emissions_per_state}, {"decoys", spec.env.decoys}}},
        {"resolved_params", d.resolved_params},
        {"result",
         {{"ok", d.outcome.ok}, {"error", d.outcome.error}, {"cover_pass", d.outcome.cover_pass},
          {"check_epsilon", spec.check_epsilon}, {"psi_size", d.outcome.psi_size},
          {"worst_deficit", d.outcome.worst_deficit}, {"episodes", d.outcome.episodes},
          {"reset_queries", d.outcome.reset_queries}, {"failing_entries", d.worst_entries}}},
        {"diagnostics", d.diagnostics},
        {"timing", {{"wall_ms", d.outcome.wall_ms}}},
    };
    runs.push_back(std::move(run));
  }

  const int total = out.pass_count + out.fail_count;
  json report = {
      {"format", "bmdp-report"},
      {"version", 1},
      {"created", "see timing"},
      {"seed", config.seed},
      {"jobs", config.jobs},
      {"field_semantics", field_semantics()},
      {"runs", std::move(runs)},
      {"summary",
       {{"run_count", total}, {"pass_count", out.pass_count}, {"fail_count", out.fail_count},
        {"pass_rate", total > 0 ? static_cast<double>(out.pass_count) / total : 1.0}}},
  };
  {
    // Timestamp lives beside the volatile wall times; strip_timing removes both.
    const auto now = std::chrono::system_clock::now().time_since_epoch();
    report["timing"] = {
        {"created_unix_ms",
         static_cast<double>(std::chrono::duration_cast<std::chrono::milliseconds>(now).count())}};
    report.erase("created");
  }
  out.report_json = report.dump(2);
  validate_report(out.report_json);
  return out;
}

namespace {

void collect_numeric_keys(const json& node, std::vector<std::string>& keys) {
  if (node.is_object()) {
    for (auto it = node.begin(); it != node.end(); ++it) {
      if (it.value().is_number()) keys.push_back(it.key());
      collect_numeric_keys(it.value(), keys);
    }
  } else if (node.is_array()) {
    for (const auto& v : node) collect_numeric_keys(v, keys);
  }
}

}  // namespace

void validate_report(const std::string& report_json) {
  json report = json::parse(report_json);
  const json semantics = report.at("field_semantics");
  json body = report;
  body.erase("field_semantics");
  body.erase("timing");
  std::vector<std::string> keys;
  collect_numeric_keys(body, keys);
  for (const auto& k : keys) {
    if (!semantics.contains(k))
      throw ConfigError("report numeric field '" + k + "' missing from field_semantics");
  }
}

std::string strip_timing(const std::string& report_json) {
  json report = json::parse(report_json);
  report.erase("timing");
  if (report.contains("runs"))
    for (auto& run : report.at("runs")) run.erase("timing");
  return report.dump(2);
}

}  // namespace bmdp
