#include "prefgame.h"

#include <cstring>
#include <new>
#include <string>

#include "json.hpp"

#include "prefgame/accept.hpp"
#include "prefgame/errors.hpp"
#include "prefgame/harness.hpp"
#include "prefgame/io.hpp"
#include "prefgame/solver.hpp"

using prefgame::Instance;

struct pfg_instance {
  Instance inst;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pfg_status fail(pfg_status code, const char* what) {
  g_last_error = what;
  return code;
}

// Maps the C++ error taxonomy onto status codes; most-derived types first.
template <typename Fn>
pfg_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return PFG_OK;
  } catch (const prefgame::ParseError& e) {
    return fail(PFG_ERR_PARSE, e.what());
  } catch (const prefgame::IoError& e) {
    return fail(PFG_ERR_IO, e.what());
  } catch (const prefgame::InvalidArgument& e) {
    return fail(PFG_ERR_INVALID_ARGUMENT, e.what());
  } catch (const prefgame::SupportViolation& e) {
    return fail(PFG_ERR_SUPPORT, e.what());
  } catch (const prefgame::DimensionMismatch& e) {
    return fail(PFG_ERR_DIMENSION, e.what());
  } catch (const prefgame::ConvergenceError& e) {
    return fail(PFG_ERR_CONVERGENCE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PFG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PFG_ERR_INTERNAL, e.what());
  }
}

pfg_status require(bool ok, const char* what) {
  return ok ? PFG_OK : fail(PFG_ERR_INVALID_ARGUMENT, what);
}

}  // namespace

extern "C" {

const char* pfg_last_error(void) { return g_last_error.c_str(); }

void pfg_string_free(char* s) { delete[] s; }

pfg_status pfg_instance_load(const char* path, pfg_instance** out) {
  if (require(path != nullptr && out != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  return guarded([&] { *out = new pfg_instance{prefgame::instance_load(path)}; });
}

pfg_status pfg_instance_parse(const char* text, pfg_instance** out) {
  if (require(text != nullptr && out != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  *out = nullptr;
  return guarded([&] { *out = new pfg_instance{prefgame::instance_from_string(text)}; });
}

void pfg_instance_free(pfg_instance* inst) { delete inst; }

pfg_status pfg_solve_nash(const pfg_instance* inst, double eta, double tol,
                          char** json_out) {
  if (require(inst != nullptr && json_out != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  *json_out = nullptr;
  return guarded([&] {
    prefgame::GameConfig cfg = inst->inst.cfg;
    if (eta > 0.0) cfg.eta = eta;
    double use_tol = tol > 0.0 ? tol : prefgame::kSolverTol;
    prefgame::NashResult r = prefgame::solve_nash(cfg, inst->inst.pref, use_tol);
    nlohmann::ordered_json rec;
    rec["eta"] = cfg.eta;
    rec["tol"] = use_tol;
    rec["duality_gap"] = r.duality_gap;
    rec["iterations"] = r.iterations;
    rec["converged"] = r.converged;
    rec["used_fallback"] = r.used_fallback;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& row : r.policy.rows) rows.push_back(row);
    rec["policy"] = rows;
    *json_out = dup_string(rec.dump());
  });
}

pfg_status pfg_collect(const pfg_instance* inst, const char* oracle, size_t n,
                       uint64_t seed, char** text_out) {
  if (require(inst != nullptr && text_out != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  *text_out = nullptr;
  return guarded([&] {
    std::string spec = oracle == nullptr || *oracle == '\0' ? "instance" : oracle;
    prefgame::PreferenceFunction env = prefgame::resolve_oracle(spec, inst->inst);
    prefgame::PreferenceDataset d = prefgame::collect(
        inst->inst.cfg, inst->inst.cfg.pi0, inst->inst.cfg.pi0, env, n, seed);
    d.behavior1 = "pi0";
    d.behavior2 = "pi0";
    *text_out = dup_string(prefgame::dataset_to_string(d));
  });
}

pfg_status pfg_experiment_run(const char* config_text, const char* const* overrides,
                              size_t n_overrides, const char* mode, char** jsonl_out,
                              char** csv_out) {
  if (require(config_text != nullptr && jsonl_out != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  if (n_overrides > 0 && overrides == nullptr)
    return fail(PFG_ERR_INVALID_ARGUMENT, "null overrides with n_overrides > 0");
  *jsonl_out = nullptr;
  if (csv_out != nullptr) *csv_out = nullptr;
  return guarded([&] {
    prefgame::ExperimentConfig cfg = prefgame::experiment_from_string(config_text);
    for (size_t i = 0; i < n_overrides; ++i) {
      if (overrides[i] == nullptr) throw prefgame::InvalidArgument("null override entry");
      prefgame::apply_override(cfg, overrides[i]);
    }
    std::string want = mode == nullptr ? "" : mode;
    using Alg = prefgame::ExperimentConfig::Algorithm;
    if (want == "offline" && cfg.algorithm == Alg::online)
      throw prefgame::InvalidArgument("config selects the online algorithm; use the online mode");
    if (want == "online" && cfg.algorithm != Alg::online)
      throw prefgame::InvalidArgument("config selects an offline algorithm; use the offline mode");
    if (want == "sweep" && cfg.sweep_values.empty())
      throw prefgame::InvalidArgument("sweep mode requires a [sweep] section with values");
    if (want != "" && want != "offline" && want != "online" && want != "sweep")
      throw prefgame::InvalidArgument("unknown experiment mode: " + want);
    prefgame::ExperimentReport report = prefgame::run_experiment(cfg);
    // Outputs are populated even when replicates failed: the error records are
    // part of the stream, and the status code carries the failure.
    *jsonl_out = dup_string(report.jsonl);
    if (csv_out != nullptr) *csv_out = dup_string(report.summary_csv);
    if (report.failed > 0)
      throw prefgame::ConvergenceError(std::to_string(report.failed) +
                                       " replicate(s) failed; records carry the details");
  });
}

pfg_status pfg_accept(double tol_scale, int only, char** table_out, int* passed) {
  if (require(table_out != nullptr && passed != nullptr, "null argument") != PFG_OK)
    return PFG_ERR_INVALID_ARGUMENT;
  *table_out = nullptr;
  *passed = 0;
  return guarded([&] {
    prefgame::AcceptanceOptions opt;
    opt.tol_scale = tol_scale;
    opt.only = only;
    prefgame::AcceptanceReport report = prefgame::acceptance_suite(opt);
    *table_out = dup_string(report.table());
    *passed = report.passed ? 1 : 0;
  });
}

}  // extern "C"
