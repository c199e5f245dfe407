#include "prefgame/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "prefgame/errors.hpp"

namespace prefgame {

namespace {

using ordered_json = nlohmann::ordered_json;

void reject_duplicate_keys(const IniSection& sec) {
  for (std::size_t i = 0; i < sec.entries.size(); ++i)
    for (std::size_t j = i + 1; j < sec.entries.size(); ++j)
      if (sec.entries[i].key == sec.entries[j].key)
        throw ParseError("[" + sec.name + "] duplicate key '" + sec.entries[i].key + "'");
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ParseError(what + ": expected true or false, got '" + s + "'");
}

void apply_experiment_key(ExperimentConfig& cfg, const std::string& key,
                          const std::string& value) {
  if (key == "instance") cfg.instance_path = value;
  else if (key == "class") cfg.class_path = value;
  else if (key == "oracle") cfg.oracle_spec = value;
  else if (key == "algorithm") cfg.algorithm = parse_algorithm(value);
  else if (key == "replicates") cfg.replicates = static_cast<int>(parse_int(value, "replicates"));
  else if (key == "base_seed") cfg.base_seed = parse_seed(value, "base_seed");
  else if (key == "output") cfg.output_path = value;
  else if (key == "summary") cfg.summary_path = value;
  else throw ParseError("[experiment] unknown key '" + key + "'");
}

void apply_offline_key(ExperimentConfig& cfg, const std::string& key,
                       const std::string& value) {
  if (key == "n") cfg.data_n = static_cast<int>(parse_int(value, "n"));
  else if (key == "behavior") cfg.behavior = value;
  else if (key == "delta") cfg.delta = parse_double(value, "delta");
  else if (key == "auto_hyperparams") cfg.auto_hyperparams = parse_bool(value, "auto_hyperparams");
  else if (key == "beta") cfg.offline.beta = parse_double(value, "beta");
  else if (key == "lambda") cfg.offline.lambda = parse_double(value, "lambda");
  else if (key == "solver_tol") cfg.offline.solver_tol = parse_double(value, "solver_tol");
  else if (key == "solver_max_iter")
    cfg.offline.solver_max_iter = static_cast<int>(parse_int(value, "solver_max_iter"));
  else if (key == "mirror_max_iter")
    cfg.offline.mirror_max_iter = static_cast<int>(parse_int(value, "mirror_max_iter"));
  else throw ParseError("[offline] unknown key '" + key + "'");
}

void apply_online_key(ExperimentConfig& cfg, const std::string& key,
                      const std::string& value) {
  if (key == "iterations") cfg.online.iterations = static_cast<int>(parse_int(value, "iterations"));
  else if (key == "batch_size") cfg.online.batch_size = static_cast<int>(parse_int(value, "batch_size"));
  else if (key == "lambda") cfg.online.lambda = parse_double(value, "lambda");
  else if (key == "beta") cfg.online.beta = parse_double(value, "beta");
  else if (key == "delta") cfg.delta = parse_double(value, "delta");
  else if (key == "epsilon") cfg.epsilon = parse_double(value, "epsilon");
  else if (key == "d_est") cfg.d_est = parse_double(value, "d_est");
  else if (key == "auto_hyperparams") cfg.auto_hyperparams = parse_bool(value, "auto_hyperparams");
  else if (key == "enhancer") cfg.online.enhancer_mode = parse_enhancer_mode(value);
  else if (key == "bon_n") cfg.online.bon_n = static_cast<int>(parse_int(value, "bon_n"));
  else if (key == "candidates") cfg.online.candidates = static_cast<int>(parse_int(value, "candidates"));
  else if (key == "solver_tol") cfg.online.solver_tol = parse_double(value, "solver_tol");
  else if (key == "solver_max_iter")
    cfg.online.solver_max_iter = static_cast<int>(parse_int(value, "solver_max_iter"));
  else throw ParseError("[online] unknown key '" + key + "'");
}

void apply_sweep_key(ExperimentConfig& cfg, const std::string& key,
                     const std::string& value) {
  if (key == "values") cfg.sweep_values = parse_int_list(value, "sweep values");
  else throw ParseError("[sweep] unknown key '" + key + "'");
}

Policy uniform_policy(const GameConfig& cfg) {
  Policy p;
  p.rows.resize(static_cast<std::size_t>(cfg.actions.size()));
  for (int x = 0; x < cfg.actions.size(); ++x)
    p.rows[static_cast<std::size_t>(x)].assign(
        static_cast<std::size_t>(cfg.actions.counts[static_cast<std::size_t>(x)]),
        1.0 / cfg.actions.counts[static_cast<std::size_t>(x)]);
  return p;
}

ordered_json policy_json(const Policy& p) {
  ordered_json rows = ordered_json::array();
  for (const auto& row : p.rows) rows.push_back(row);
  return rows;
}

// Shared inputs loaded once; replicate tasks only read from this.
struct Shared {
  const ExperimentConfig& cfg;
  Instance inst;
  FiniteClass cls;
  PreferenceFunction env;
  Policy target;  // equilibrium policy of the environment oracle
  Policy b1, b2;  // offline behavior pair
};

double offline_solver_tol(const ExperimentConfig& cfg) {
  return cfg.algorithm == ExperimentConfig::Algorithm::online ? cfg.online.solver_tol
                                                              : cfg.offline.solver_tol;
}

void run_offline_replicate(const Shared& sh, ReplicateResult& out) {
  const ExperimentConfig& cfg = sh.cfg;
  const GameConfig& game = sh.inst.cfg;

  PreferenceDataset d = collect(game, sh.b1, sh.b2, sh.env,
                                static_cast<std::size_t>(out.sweep_value), out.seed);

  OfflineConfig off = cfg.offline;
  double beta = off.beta, lambda = off.lambda;
  if (cfg.auto_hyperparams) {
    auto hp = offline_hyperparams(sh.cls.size(), cfg.delta);
    beta = hp.first;
    lambda = hp.second;
    off.beta = beta;
    off.lambda = lambda;
  }
  off.delta = cfg.delta;

  OfflineResult res = cfg.algorithm == ExperimentConfig::Algorithm::offline_vs
                          ? pelhf_version_space(sh.cls, d, game, off)
                          : pelhf_bonus(sh.cls, d, game, off);

  const PreferenceFunction& phat = sh.cls.members[static_cast<std::size_t>(res.mle_index)];
  Policy opponent = best_response_min(game, sh.env, res.policy);
  out.subopt = 0.5 - game_value(game, sh.env, res.policy, opponent);
  out.duality_gap = duality_gap(game, sh.env, res.policy, res.policy);
  out.in_sample_error = sq_distance(phat, sh.env, d);

  CoverageResult cov = coverage_coefficient(sh.cls, phat, sh.target, sh.b1, sh.b2, game);
  CoverageResult cov_tilde = coverage_coefficient_tilde(sh.cls, phat, sh.target, sh.b1, sh.b2, game);
  out.coverage = cov.infinite ? 0.0 : cov.value;
  out.coverage_infinite = cov.infinite;
  out.bound_infinite = cov.infinite;
  out.bound = cov.infinite ? 0.0 : 4.0 * beta * std::sqrt(cov.value / out.sweep_value);
  out.satisfied = !out.bound_infinite && out.subopt <= out.bound;

  ordered_json rec;
  rec["run"] = out.run;
  rec["seed"] = out.seed;
  rec["n"] = out.sweep_value;
  rec["iteration"] = -1;
  rec["algorithm"] = algorithm_name(cfg.algorithm);
  rec["mle_index"] = res.mle_index;
  rec["version_space_size"] = static_cast<int>(res.version_space.size());
  rec["subopt"] = out.subopt;
  rec["duality_gap"] = out.duality_gap;
  rec["in_sample_error"] = out.in_sample_error;
  rec["coverage"] = out.coverage;
  rec["coverage_infinite"] = out.coverage_infinite;
  rec["coverage_tilde"] = cov_tilde.infinite ? 0.0 : cov_tilde.value;
  rec["coverage_tilde_infinite"] = cov_tilde.infinite;
  rec["beta"] = beta;
  rec["lambda"] = lambda;
  rec["bound"] = out.bound;
  rec["bound_infinite"] = out.bound_infinite;
  rec["satisfied"] = out.satisfied;
  rec["pessimistic_value"] = res.pessimistic_value;
  rec["hit_iteration_cap"] = res.hit_iteration_cap;
  rec["policy"] = policy_json(res.policy);
  out.json_lines.push_back(rec.dump());
}

void run_online_replicate(const Shared& sh, ReplicateResult& out) {
  const ExperimentConfig& cfg = sh.cfg;
  const GameConfig& game = sh.inst.cfg;

  OnlineConfig on = cfg.online;
  on.seed = out.seed;
  on.batch_size = out.sweep_value;
  int schedule_T = on.iterations;
  if (cfg.auto_hyperparams) {
    OnlineSchedule sched = online_hyperparams(sh.cls.size(), cfg.delta, cfg.epsilon, cfg.d_est);
    on.iterations = sched.T;
    on.beta = sched.beta;
    on.lambda = sched.lambda;
    schedule_T = sched.T;
    if (cfg.sweep_values.empty()) {
      on.batch_size = sched.m;
      out.sweep_value = sched.m;
    }
  }

  OnlineTrace trace = oelhf_run(sh.env, sh.cls, game, on);
  EluderDiagnostic eluder = eluder_diagnostic(trace, sh.cls, on.lambda, game);

  double min_gap = 0.0;
  bool have_gap = false;
  for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
    const OnlineIteration& it = trace.iterations[i];
    double gap = it.main_gap_true;
    if (!have_gap || gap < min_gap) {
      min_gap = gap;
      have_gap = true;
    }
    ordered_json rec;
    rec["run"] = out.run;
    rec["seed"] = out.seed;
    rec["n"] = out.sweep_value;
    rec["iteration"] = it.t;
    rec["algorithm"] = algorithm_name(cfg.algorithm);
    rec["mle_index"] = it.mle_index;
    rec["gap_true"] = gap;
    rec["subopt"] = 0.5 * gap;
    rec["in_sample_error"] = it.in_sample_error;
    rec["pair_bonus"] = it.pair_bonus;
    rec["eluder_ratio"] = eluder.per_step[i];
    rec["eluder_sum"] = eluder.running_sum[i];
    rec["enhancer_log_ratio"] = it.enhancer_log_ratio;
    out.json_lines.push_back(rec.dump());
  }
  if (!have_gap) throw ConvergenceError("online run produced no iterations: " + trace.error, {}, 0.0);

  CheckpointChoice pick = select_checkpoint(trace, sh.env, game);

  out.duality_gap = min_gap;
  out.subopt = 0.5 * min_gap;
  out.in_sample_error = trace.iterations.back().in_sample_error;
  double ln_arg = 2.0 * schedule_T * sh.cls.size() / cfg.delta;
  out.bound = 3.0 * std::sqrt(2.0 * schedule_T * std::log(ln_arg) / on.batch_size);
  out.satisfied = min_gap <= out.bound;

  ordered_json rec;
  rec["run"] = out.run;
  rec["seed"] = out.seed;
  rec["n"] = out.sweep_value;
  rec["iteration"] = -1;
  rec["algorithm"] = algorithm_name(cfg.algorithm);
  rec["iterations_completed"] = static_cast<int>(trace.iterations.size());
  rec["aborted"] = trace.aborted;
  rec["error"] = trace.error;
  rec["min_gap"] = min_gap;
  rec["subopt"] = out.subopt;
  rec["selected_iteration"] = pick.index;
  rec["beta"] = on.beta;
  rec["lambda"] = on.lambda;
  rec["bound"] = out.bound;
  rec["satisfied"] = out.satisfied;
  rec["eluder_total"] = eluder.running_sum.back();
  rec["policy"] = policy_json(pick.policy);
  out.json_lines.push_back(rec.dump());
}

void run_one(const Shared& sh, ReplicateResult& out) {
  try {
    if (sh.cfg.algorithm == ExperimentConfig::Algorithm::online)
      run_online_replicate(sh, out);
    else
      run_offline_replicate(sh, out);
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
    ordered_json rec;
    rec["run"] = out.run;
    rec["seed"] = out.seed;
    rec["n"] = out.sweep_value;
    rec["iteration"] = -1;
    rec["algorithm"] = algorithm_name(sh.cfg.algorithm);
    rec["error"] = out.error;
    out.json_lines.assign(1, rec.dump());
  }
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int worker_count() {
  const char* env = std::getenv("PREFGAME_WORKERS");
  if (env != nullptr && *env != '\0') {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != nullptr && *end == '\0' && v >= 1 && v <= 1024) return static_cast<int>(v);
    std::fprintf(stderr, "ignoring invalid PREFGAME_WORKERS='%s'\n", env);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

const char* algorithm_name(ExperimentConfig::Algorithm a) {
  switch (a) {
    case ExperimentConfig::Algorithm::offline_vs: return "offline_vs";
    case ExperimentConfig::Algorithm::offline_bonus: return "offline_bonus";
    case ExperimentConfig::Algorithm::online: return "online";
  }
  throw InvalidArgument("algorithm_name: unknown algorithm");
}

ExperimentConfig::Algorithm parse_algorithm(const std::string& name) {
  if (name == "offline_vs") return ExperimentConfig::Algorithm::offline_vs;
  if (name == "offline_bonus") return ExperimentConfig::Algorithm::offline_bonus;
  if (name == "online") return ExperimentConfig::Algorithm::online;
  throw ParseError("unknown algorithm: " + name);
}

void ExperimentConfig::validate() const {
  if (instance_path.empty()) throw InvalidArgument("experiment: instance path is required");
  if (class_path.empty()) throw InvalidArgument("experiment: class path is required");
  if (replicates < 1) throw InvalidArgument("experiment: replicates must be >= 1");
  if (data_n < 1) throw InvalidArgument("experiment: n must be >= 1");
  if (behavior != "uniform" && behavior != "pi0")
    throw InvalidArgument("experiment: behavior must be uniform or pi0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("experiment: delta must be in (0,1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("experiment: epsilon must be > 0");
  if (!(d_est > 0.0)) throw InvalidArgument("experiment: d_est must be > 0");
  for (int v : sweep_values)
    if (v < 1) throw InvalidArgument("experiment: sweep values must be >= 1");
  offline.validate();
  online.validate();
}

ExperimentConfig experiment_from_string(const std::string& text) {
  ExperimentConfig cfg;
  bool saw_experiment = false;
  std::vector<std::string> seen;
  for (const IniSection& sec : parse_sections(text)) {
    if (std::find(seen.begin(), seen.end(), sec.name) != seen.end())
      throw ParseError("duplicate section [" + sec.name + "]");
    seen.push_back(sec.name);
    reject_duplicate_keys(sec);
    if (sec.name == "experiment") {
      saw_experiment = true;
      for (const IniEntry& e : sec.entries) apply_experiment_key(cfg, e.key, e.value);
    } else if (sec.name == "offline") {
      for (const IniEntry& e : sec.entries) apply_offline_key(cfg, e.key, e.value);
    } else if (sec.name == "online") {
      for (const IniEntry& e : sec.entries) apply_online_key(cfg, e.key, e.value);
    } else if (sec.name == "sweep") {
      for (const IniEntry& e : sec.entries) apply_sweep_key(cfg, e.key, e.value);
    } else {
      throw ParseError("unknown section [" + sec.name + "]");
    }
  }
  if (!saw_experiment) throw ParseError("missing [experiment] section");
  cfg.validate();
  return cfg;
}

ExperimentConfig experiment_load(const std::string& path) {
  try {
    return experiment_from_string(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ParseError("override '" + assignment + "': expected section.key=value");
  std::string lhs = assignment.substr(0, eq);
  std::string value = assignment.substr(eq + 1);
  std::size_t dot = lhs.find('.');
  if (dot == std::string::npos)
    throw ParseError("override '" + assignment + "': expected section.key=value");
  std::string section = lhs.substr(0, dot);
  std::string key = lhs.substr(dot + 1);
  if (section == "experiment") apply_experiment_key(cfg, key, value);
  else if (section == "offline") apply_offline_key(cfg, key, value);
  else if (section == "online") apply_online_key(cfg, key, value);
  else if (section == "sweep") apply_sweep_key(cfg, key, value);
  else throw ParseError("override '" + assignment + "': unknown section '" + section + "'");
  cfg.validate();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  cfg.validate();

  Shared sh{cfg, instance_load(cfg.instance_path), FiniteClass{}, PreferenceFunction{}, Policy{},
            Policy{}, Policy{}};
  ClassSpec spec = class_load(cfg.class_path);
  if (spec.kind != ClassSpec::Kind::finite)
    throw InvalidArgument("experiments require a finite preference class");
  sh.cls = spec.finite;
  sh.env = resolve_oracle(cfg.oracle_spec, sh.inst);
  sh.target = solve_nash(sh.inst.cfg, sh.env, offline_solver_tol(cfg)).policy;
  sh.b1 = cfg.behavior == "pi0" ? sh.inst.cfg.pi0 : uniform_policy(sh.inst.cfg);
  sh.b2 = sh.b1;

  std::vector<int> sweep = cfg.sweep_values;
  if (sweep.empty())
    sweep.push_back(cfg.algorithm == ExperimentConfig::Algorithm::online ? cfg.online.batch_size
                                                                         : cfg.data_n);

  ExperimentReport report;
  // Seeds repeat across sweep values so sweep comparisons are paired by seed.
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    for (int i = 0; i < cfg.replicates; ++i) {
      ReplicateResult r;
      r.run = i;
      r.sweep_value = sweep[s];
      r.seed = cfg.base_seed + static_cast<std::uint64_t>(i);
      report.replicates.push_back(std::move(r));
    }
  }

  int workers = std::min<int>(worker_count(), static_cast<int>(report.replicates.size()));
  if (workers <= 1) {
    for (ReplicateResult& r : report.replicates) run_one(sh, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= report.replicates.size()) return;
          run_one(sh, report.replicates[i]);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  std::ostringstream jsonl;
  for (const ReplicateResult& r : report.replicates) {
    if (!r.ok) ++report.failed;
    for (const std::string& line : r.json_lines) jsonl << line << '\n';
  }
  report.jsonl = jsonl.str();

  std::ostringstream csv;
  csv << "algorithm,value,replicates,failed,subopt_mean,subopt_std,subopt_median,"
         "gap_mean,bound_mean,satisfied_fraction\n";
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    std::vector<double> subopt, gap, bound;
    int ok = 0, failed = 0, satisfied = 0;
    for (const ReplicateResult& r : report.replicates) {
      if (r.sweep_value != sweep[s]) continue;
      if (!r.ok) {
        ++failed;
        continue;
      }
      ++ok;
      subopt.push_back(r.subopt);
      gap.push_back(r.duality_gap);
      bound.push_back(r.bound_infinite ? 0.0 : r.bound);
      if (r.satisfied) ++satisfied;
    }
    csv << algorithm_name(cfg.algorithm) << ',' << sweep[s] << ',' << ok << ',' << failed << ','
        << format_double(mean_of(subopt)) << ',' << format_double(std_of(subopt)) << ','
        << format_double(median_of(subopt)) << ',' << format_double(mean_of(gap)) << ','
        << format_double(mean_of(bound)) << ','
        << format_double(ok == 0 ? 0.0 : static_cast<double>(satisfied) / ok) << '\n';
  }
  report.summary_csv = csv.str();

  if (!cfg.output_path.empty()) {
    write_file(cfg.output_path, report.jsonl);
    std::string summary = cfg.summary_path.empty() ? cfg.output_path + ".csv" : cfg.summary_path;
    write_file(summary, report.summary_csv);
  }

  auto t1 = std::chrono::steady_clock::now();
  double secs = std::chrono::duration<double>(t1 - t0).count();
  std::fprintf(stderr, "experiment: %zu replicate(s), %d failed, %.3fs wall\n",
               report.replicates.size(), report.failed, secs);
  return report;
}

}  // namespace prefgame
