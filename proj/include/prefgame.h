#ifndef PREFGAME_H
#define PREFGAME_H

/* C interface to the preference-game laboratory.
 *
 * All functions return a pfg_status; on failure pfg_last_error() holds a
 * thread-local message. Strings handed out through char** are owned by the
 * caller and must be released with pfg_string_free. Handles are opaque.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pfg_status {
  PFG_OK = 0,
  PFG_ERR_IO = 1,
  PFG_ERR_PARSE = 2,
  PFG_ERR_INVALID_ARGUMENT = 3,
  PFG_ERR_SUPPORT = 4,
  PFG_ERR_DIMENSION = 5,
  PFG_ERR_CONVERGENCE = 6,
  PFG_ERR_INTERNAL = 7
} pfg_status;

/* Message describing the calling thread's most recent failure ("" if none).
 * The pointer stays valid until the thread's next API call. */
const char* pfg_last_error(void);

void pfg_string_free(char* s);

typedef struct pfg_instance pfg_instance;

pfg_status pfg_instance_load(const char* path, pfg_instance** out);
pfg_status pfg_instance_parse(const char* text, pfg_instance** out);
void pfg_instance_free(pfg_instance* inst);

/* Equilibrium of the instance's game. eta > 0 overrides the instance's eta
 * (pass 0 to keep it); tol <= 0 selects the default certificate tolerance.
 * json_out receives one JSON object: policy, duality_gap, iterations,
 * converged, used_fallback, eta. */
pfg_status pfg_solve_nash(const pfg_instance* inst, double eta, double tol,
                          char** json_out);

/* n labeled comparisons with both responses drawn from the instance's
 * reference policy, labels from the named oracle: "instance", "cyclic:<w>",
 * "bt:<path>", or "table:<path>". NULL or "" selects "instance". text_out
 * receives the dataset text. */
pfg_status pfg_collect(const pfg_instance* inst, const char* oracle, size_t n,
                       uint64_t seed, char** text_out);

/* Parses an experiment config (same text schema as the files), applies
 * "section.key=value" overrides in order, and runs it. mode restricts the
 * config's algorithm: "offline", "online", "sweep" (requires a [sweep]
 * section), or NULL/"" for no restriction. jsonl_out receives the metric
 * records; csv_out (optional, may be NULL) the summary. Output files named
 * in the config are also written. Failed replicates yield
 * PFG_ERR_CONVERGENCE with the outputs still populated (error records are
 * part of the stream). */
pfg_status pfg_experiment_run(const char* config_text, const char* const* overrides,
                              size_t n_overrides, const char* mode, char** jsonl_out,
                              char** csv_out);

/* Runs the acceptance suite. tol_scale multiplies every solver tolerance
 * (1.0 = normal; larger values are the tampering control and must fail).
 * only = 0 runs all criteria, 1..11 a single one. table_out receives the
 * per-criterion table; *passed is 1 iff every executed criterion passed. */
pfg_status pfg_accept(double tol_scale, int only, char** table_out, int* passed);

#ifdef __cplusplus
}
#endif

#endif /* PREFGAME_H */
