/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MDFCDA_H
#define MDFCDA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdfcdaStatus {
  MDFCDA_STATUS_OK = 0,
  MDFCDA_STATUS_NULL_POINTER = 1,
  MDFCDA_STATUS_INVALID_ARGUMENT = 2,
  MDFCDA_STATUS_INVALID_CONFIG = 3,
  MDFCDA_STATUS_RUNTIME = 4,
  MDFCDA_STATUS_IO = 5,
  MDFCDA_STATUS_PANIC = 6,
} MdfcdaStatus;

typedef enum MdfcdaSolverMode {
  MDFCDA_SOLVER_MODE_EXACT = 0,
  MDFCDA_SOLVER_MODE_HEURISTIC = 1,
  MDFCDA_SOLVER_MODE_ORACLE = 2,
} MdfcdaSolverMode;

typedef enum MdfcdaOptimality {
  MDFCDA_OPTIMALITY_PROVED_OPTIMAL = 0,
  MDFCDA_OPTIMALITY_HEURISTIC = 1,
  MDFCDA_OPTIMALITY_ORACLE = 2,
} MdfcdaOptimality;

typedef struct MdfcdaInstance MdfcdaInstance;

// Collects bids before an instance is built.
typedef struct MdfcdaInstanceBuilder MdfcdaInstanceBuilder;

typedef struct MdfcdaReport MdfcdaReport;

typedef struct MdfcdaSolution MdfcdaSolution;

typedef struct MdfcdaFairnessParams {
  double alpha1;
  double alpha2;
  double beta1;
  double beta2;
  uint32_t max_losses;
} MdfcdaFairnessParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. The pointer is
// valid until the next call into the library from this thread.
const char *mdfcda_last_error(void);

// Library version as a static nul-terminated string.
const char *mdfcda_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must come from this library and not have been freed already.
void mdfcda_string_free(char *s);

struct MdfcdaFairnessParams mdfcda_default_fairness_params(void);

// Reward factor for a consumer that lost the previous round.
//
// # Safety
// `params` and `out` must be valid pointers.
enum MdfcdaStatus mdfcda_fun_w(uint32_t losses,
                               double eval,
                               uint32_t consecutive_losses,
                               const struct MdfcdaFairnessParams *params,
                               double *out);

// Penalty factor for a consumer that won the previous round.
//
// # Safety
// `params` and `out` must be valid pointers.
enum MdfcdaStatus mdfcda_fun_l(uint32_t wins,
                               double eval,
                               uint32_t consecutive_losses,
                               const struct MdfcdaFairnessParams *params,
                               double *out);

// # Safety
// `out` must be a valid pointer.
enum MdfcdaStatus mdfcda_builder_new(size_t num_types, struct MdfcdaInstanceBuilder **out);

// Adds a consumer bid. `prices_cents` and `quantities` hold `len` entries,
// one per resource type. Consumers must be added in ascending id order.
//
// # Safety
// `builder` must be a live builder and both arrays must hold `len` elements.
enum MdfcdaStatus mdfcda_builder_add_consumer(struct MdfcdaInstanceBuilder *builder,
                                              uint32_t id,
                                              const int64_t *prices_cents,
                                              const uint32_t *quantities,
                                              size_t len,
                                              double fairness_factor);

// Adds a provider bid; same conventions as consumers.
//
// # Safety
// `builder` must be a live builder and both arrays must hold `len` elements.
enum MdfcdaStatus mdfcda_builder_add_provider(struct MdfcdaInstanceBuilder *builder,
                                              uint32_t id,
                                              const int64_t *prices_cents,
                                              const uint32_t *quantities,
                                              size_t len);

// Builds an instance from the bids added so far. The builder stays usable.
//
// # Safety
// `builder` must be live and `out` valid.
enum MdfcdaStatus mdfcda_builder_build(const struct MdfcdaInstanceBuilder *builder,
                                       struct MdfcdaInstance **out);

// # Safety
// `builder` must be null or a builder not yet freed.
void mdfcda_builder_free(struct MdfcdaInstanceBuilder *builder);

// Parses an instance from its text dump format.
//
// # Safety
// `text` must be a nul-terminated string and `out` valid.
enum MdfcdaStatus mdfcda_instance_parse(const char *text, struct MdfcdaInstance **out);

// Writes the instance in text dump format; free with [`mdfcda_string_free`].
//
// # Safety
// `instance` must be live and `out` valid.
enum MdfcdaStatus mdfcda_instance_dump(const struct MdfcdaInstance *instance, char **out);

// # Safety
// `instance` must be live.
size_t mdfcda_instance_num_consumers(const struct MdfcdaInstance *instance);

// # Safety
// `instance` must be null or an instance not yet freed.
void mdfcda_instance_free(struct MdfcdaInstance *instance);

// Solves winner determination. A zero limit selects the default.
//
// # Safety
// `instance` must be live and `out` valid.
enum MdfcdaStatus mdfcda_solve(const struct MdfcdaInstance *instance,
                               enum MdfcdaSolverMode mode,
                               uint64_t time_limit_ms,
                               uint64_t node_limit,
                               struct MdfcdaSolution **out);

// # Safety
// `solution` must be live.
double mdfcda_solution_objective(const struct MdfcdaSolution *solution);

// # Safety
// `solution` must be live.
double mdfcda_solution_total_utility(const struct MdfcdaSolution *solution);

// # Safety
// `solution` must be live.
double mdfcda_solution_gap_bound(const struct MdfcdaSolution *solution);

// # Safety
// `solution` must be live and `out` valid.
enum MdfcdaStatus mdfcda_solution_optimality(const struct MdfcdaSolution *solution,
                                             enum MdfcdaOptimality *out);

// Whether the consumer at row `consumer` (insertion order) won.
//
// # Safety
// `solution` must be live and `out` valid.
enum MdfcdaStatus mdfcda_solution_is_winner(const struct MdfcdaSolution *solution,
                                            size_t consumer,
                                            bool *out);

// Units of type `resource` moved from provider row `provider` to consumer row `consumer`.
//
// # Safety
// `solution` must be live and `out` valid.
enum MdfcdaStatus mdfcda_solution_units(const struct MdfcdaSolution *solution,
                                        size_t consumer,
                                        size_t resource,
                                        size_t provider,
                                        uint32_t *out);

// # Safety
// `solution` must be null or a solution not yet freed.
void mdfcda_solution_free(struct MdfcdaSolution *solution);

// Runs a simulation configured by TOML text (same keys as the CLI config
// file; `output_dir` is ignored).
//
// # Safety
// `config_toml` must be a nul-terminated string and `out` valid.
enum MdfcdaStatus mdfcda_simulate(const char *config_toml, struct MdfcdaReport **out);

// # Safety
// `report` must be live.
size_t mdfcda_report_num_runs(const struct MdfcdaReport *report);

// Drop count of the run at position `index`.
//
// # Safety
// `report` must be live and `out` valid.
enum MdfcdaStatus mdfcda_report_run_drops(const struct MdfcdaReport *report,
                                          size_t index,
                                          uint32_t *out);

// Full report as JSON; free with [`mdfcda_string_free`].
//
// # Safety
// `report` must be live and `out` valid.
enum MdfcdaStatus mdfcda_report_to_json(const struct MdfcdaReport *report, char **out);

// # Safety
// `report` must be null or a report not yet freed.
void mdfcda_report_free(struct MdfcdaReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MDFCDA_H */
