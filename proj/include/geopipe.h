/* C interface to the geo-distributed training simulator and planner.
 *
 * Usage: create a session, load a JSON config, optionally set overrides,
 * run one or more commands, and destroy the session. Every command writes
 * its artifacts under the given output directory; identical config and
 * overrides produce byte-identical files.
 *
 * All functions taking a session are NULL-safe and return GP_ERROR on a
 * NULL session. Sessions are not thread-safe; use one per thread.
 */
#ifndef GEOPIPE_H_
#define GEOPIPE_H_

#ifdef __cplusplus
extern "C" {
#endif

/* Return codes; nonzero values double as process exit codes. */
#define GP_OK 0
#define GP_ERROR 1        /* internal failure (bug or I/O)            */
#define GP_CONFIG_ERROR 2 /* malformed or inconsistent configuration  */
#define GP_INFEASIBLE 3   /* plan needs more GPUs than the topology   */

typedef struct gp_session gp_session;

gp_session* gp_session_create(void);
void gp_session_destroy(gp_session* s);

/* Load the experiment description. Text is parsed lazily by the run
 * functions, so a parse error surfaces there. */
int gp_load_config_file(gp_session* s, const char* path);
int gp_load_config_text(gp_session* s, const char* text);

/* Overrides on top of the config document. */
int gp_set_policy(gp_session* s, const char* policy); /* gpipe|1f1b|varuna|atlas */
int gp_set_seed(gp_session* s, unsigned seed);
int gp_set_multi_conn(gp_session* s, int enabled);
int gp_set_recompute(gp_session* s, int enabled);
int gp_set_mem_limit(gp_session* s, int microbatches);
int gp_set_horizon_ms(gp_session* s, double horizon_ms);

/* Commands. Each writes deterministic artifacts under out_dir:
 *   simulate  -> metrics.csv, schedule.csv, trace.json
 *   trace     -> trace.json
 *   select_dc -> selection.csv (table via gp_selection_table)
 *   whatif    -> whatif.csv
 *   bubbletea -> placements.csv, bubbletea_metrics.csv, trace.json
 */
int gp_run_simulate(gp_session* s, const char* out_dir);
int gp_run_trace(gp_session* s, const char* out_dir);
int gp_run_select_dc(gp_session* s, const char* out_dir);
int gp_run_whatif(gp_session* s, const char* out_dir);
int gp_run_bubbletea(gp_session* s, const char* out_dir);

/* Message for the most recent failing call; empty string if none.
 * Valid until the next call on the session. */
const char* gp_last_error(gp_session* s);

/* Human-readable selection table from the last gp_run_select_dc. */
const char* gp_selection_table(gp_session* s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GEOPIPE_H_ */
