#pragma once

#include <string>
#include <vector>

namespace prefgame {

/* Acceptance suite: one self-contained check per shipped guarantee, each with
 * pinned seeds and fixed thresholds. tol_scale multiplies every solver
 * tolerance while the pass thresholds stay fixed, so loosening the solvers
 * (e.g. tol_scale = 1e4) must surface as reported certificate failures.
 */
struct AcceptanceOptions {
  double tol_scale = 1.0;
  int only = 0;  // 0 = run all criteria, otherwise the single 1-based id
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;    // deterministic metrics only (re-runs are byte-identical)
  double seconds = 0.0;  // wall time, reported on stderr only
};

struct AcceptanceReport {
  std::vector<CriterionResult> criteria;
  bool passed = true;
  double seconds = 0.0;

  std::string table() const;  // per-criterion PASS/FAIL lines plus a summary line
};

AcceptanceReport acceptance_suite(const AcceptanceOptions& opt = {});

}  // namespace prefgame
