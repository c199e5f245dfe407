// Command-line front end; all work goes through the C API in prefgame.h.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "prefgame.h"

namespace {

struct StringGuard {
  char* s = nullptr;
  ~StringGuard() { pfg_string_free(s); }
};

struct InstanceGuard {
  pfg_instance* inst = nullptr;
  ~InstanceGuard() { pfg_instance_free(inst); }
};

int report_error(pfg_status status) {
  std::fprintf(stderr, "error: %s\n", pfg_last_error());
  return static_cast<int>(status);
}

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buf;
  buf << in.rdbuf();
  out = buf.str();
  return true;
}

// Shared shape of the config-driven subcommands (offline/online/sweep):
// --config plus repeatable --set section.key=value overrides, with a few
// convenience flags that expand to overrides.
struct ExperimentArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
  std::int64_t replicates = -1;
  std::string base_seed;
};

void add_experiment_options(CLI::App* cmd, ExperimentArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")->required();
  cmd->add_option("--set", args.overrides, "override, section.key=value (repeatable)");
  cmd->add_option("--output", args.output, "override the JSON-lines output path");
  cmd->add_option("--replicates", args.replicates, "override the replicate count");
  cmd->add_option("--base-seed", args.base_seed, "override the base seed");
}

int run_experiment_command(const ExperimentArgs& args, const char* mode) {
  std::string config_text;
  if (!read_file(args.config_path, config_text)) {
    std::fprintf(stderr, "error: cannot read %s\n", args.config_path.c_str());
    return static_cast<int>(PFG_ERR_IO);
  }
  std::vector<std::string> overrides = args.overrides;
  if (!args.output.empty()) overrides.push_back("experiment.output=" + args.output);
  if (args.replicates >= 0)
    overrides.push_back("experiment.replicates=" + std::to_string(args.replicates));
  if (!args.base_seed.empty()) overrides.push_back("experiment.base_seed=" + args.base_seed);
  std::vector<const char*> ptrs;
  ptrs.reserve(overrides.size());
  for (const std::string& s : overrides) ptrs.push_back(s.c_str());

  StringGuard jsonl, csv;
  pfg_status status = pfg_experiment_run(config_text.c_str(), ptrs.data(), ptrs.size(), mode,
                                         &jsonl.s, &csv.s);
  if (jsonl.s != nullptr) std::fputs(jsonl.s, stdout);
  if (status != PFG_OK) return report_error(status);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabular preference-game laboratory"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve-nash", "solve the instance's equilibrium");
  std::string solve_instance;
  double solve_eta = 0.0, solve_tol = 0.0;
  solve->add_option("--instance", solve_instance, "instance file")->required();
  solve->add_option("--eta", solve_eta, "override eta (> 0)");
  solve->add_option("--tol", solve_tol, "certificate tolerance (default 1e-8)");

  auto* collect = app.add_subcommand("collect", "sample labeled comparisons");
  std::string collect_instance, collect_oracle = "instance";
  std::uint64_t collect_n = 0, collect_seed = 0;
  collect->add_option("--instance", collect_instance, "instance file")->required();
  collect->add_option("--oracle", collect_oracle,
                      "instance | cyclic:<w> | bt:<path> | table:<path>");
  collect->add_option("--n", collect_n, "number of records")->required();
  collect->add_option("--seed", collect_seed, "sampling seed");

  ExperimentArgs offline_args, online_args, sweep_args;
  auto* offline = app.add_subcommand("offline", "run offline pessimistic learning");
  add_experiment_options(offline, offline_args);
  auto* online = app.add_subcommand("online", "run batch online exploration");
  add_experiment_options(online, online_args);
  auto* sweep = app.add_subcommand("sweep", "run a config with a [sweep] section");
  add_experiment_options(sweep, sweep_args);

  auto* accept = app.add_subcommand("accept", "run the acceptance suite");
  double accept_scale = 1.0;
  int accept_only = 0;
  accept->add_option("--tol-scale", accept_scale,
                     "solver tolerance multiplier (tampering control)");
  accept->add_option("--only", accept_only, "run a single criterion, 1..11");

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) {
    InstanceGuard inst;
    pfg_status status = pfg_instance_load(solve_instance.c_str(), &inst.inst);
    if (status != PFG_OK) return report_error(status);
    StringGuard json;
    status = pfg_solve_nash(inst.inst, solve_eta, solve_tol, &json.s);
    if (status != PFG_OK) return report_error(status);
    std::fputs(json.s, stdout);
    std::fputc('\n', stdout);
    return 0;
  }
  if (collect->parsed()) {
    InstanceGuard inst;
    pfg_status status = pfg_instance_load(collect_instance.c_str(), &inst.inst);
    if (status != PFG_OK) return report_error(status);
    StringGuard text;
    status = pfg_collect(inst.inst, collect_oracle.c_str(), collect_n, collect_seed, &text.s);
    if (status != PFG_OK) return report_error(status);
    std::fputs(text.s, stdout);
    return 0;
  }
  if (offline->parsed()) return run_experiment_command(offline_args, "offline");
  if (online->parsed()) return run_experiment_command(online_args, "online");
  if (sweep->parsed()) return run_experiment_command(sweep_args, "sweep");
  if (accept->parsed()) {
    StringGuard table;
    int passed = 0;
    pfg_status status = pfg_accept(accept_scale, accept_only, &table.s, &passed);
    if (status != PFG_OK) return report_error(status);
    std::fputs(table.s, stdout);
    return passed == 1 ? 0 : 1;
  }
  return 0;
}
