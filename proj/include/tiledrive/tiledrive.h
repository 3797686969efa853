/* tiledrive: tiled-matmul offload driver generator and co-simulator.
 *
 * C interface to the library. All objects are opaque handles created and
 * destroyed here; every fallible call returns a td_status and leaves a
 * human-readable message in td_last_error() (thread local, overwritten by
 * the next failing call on the same thread). Strings returned through
 * char** are heap copies owned by the caller; release them with
 * td_string_free.
 */
#ifndef TILEDRIVE_H
#define TILEDRIVE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum td_status {
  TD_OK = 0,
  TD_ERR_INVALID_ARG,
  TD_ERR_NON_DIVIDING_TILING,
  TD_ERR_FIELD_OVERFLOW,
  TD_ERR_PARSE,
  TD_ERR_VALIDATION,
  TD_ERR_NO_DOUBLE_BUFFER,
  TD_ERR_UNSUPPORTED_SHAPE,
  TD_ERR_PE_MISMATCH,
  TD_ERR_DOUBLE_BUFFER_REQUIRED,
  TD_ERR_SHAPE_MISMATCH,
  TD_ERR_EMPTY_RUN,
  TD_ERR_DEADLOCK,
  TD_ERR_VERIFY_FAILED,
  TD_ERR_JSON,
  TD_ERR_IO
} td_status;

typedef struct td_program td_program;
typedef struct td_model td_model;
typedef struct td_matrix td_matrix;
typedef struct td_result td_result;

const char* td_status_name(td_status status);

/* Message describing the most recent failure on this thread. Never NULL. */
const char* td_last_error(void);

void td_string_free(char* text);

/* -------- driver programs -------- */

/* Builds the canonical tiled-matmul driver: C (m x n) += A (m x k) times
 * B (k x n), streamed tile by tile with tiles of tm x tn x tk. Each tile
 * dimension must divide the matching problem dimension. */
td_status td_program_build(int64_t m, int64_t n, int64_t k, int64_t tm,
                           int64_t tn, int64_t tk, td_program** out);

/* Parses the textual form. Rejects programs that do not validate. */
td_status td_program_parse(const char* text, td_program** out);

td_status td_program_print(const td_program* program, char** out_text);

/* TD_OK for a well-formed program; TD_ERR_VALIDATION otherwise, with the
 * diagnostics joined into td_last_error(). */
td_status td_program_validate(const td_program* program);

/* 1 when the program requires a double-buffered accelerator. */
int td_program_needs_double_buffer(const td_program* program);

/* Structural equality up to induction-variable names. */
int td_program_equal(const td_program* a, const td_program* b);

/* Applies the named rewrites ("dma-alloc", "coalesce", "pipeline") in their
 * canonical order, each at most once, and returns the rewritten program.
 * accel_double_buffered describes the target and gates "pipeline". */
td_status td_program_apply_passes(const td_program* program,
                                  const char* const* passes, size_t n_passes,
                                  int accel_double_buffered,
                                  td_program** out);

void td_program_free(td_program* program);

/* -------- machine models -------- */

td_status td_model_create_default(td_model** out);

/* Keys: copy_per_elem, acc_per_elem, sync_cycles, first_beat,
 * queued_overhead, per_beat, pe_rows, pe_cols, double_buffered (0/1). */
td_status td_model_set_i64(td_model* model, const char* key, int64_t value);
td_status td_model_get_i64(const td_model* model, const char* key,
                           int64_t* out);

void td_model_free(td_model* model);

/* Packs tile extents into the accelerator configuration word
 * (tm | tn << 10 | tk << 20); each field must fit in 10 bits. */
td_status td_encode_config_word(int64_t tm, int64_t tn, int64_t tk,
                                uint32_t* out);

/* -------- matrices -------- */

td_status td_matrix_create(int64_t rows, int64_t cols, td_matrix** out);

/* Deterministic fill from the library's fixed generator; elements lie in
 * [-128, 127]. */
td_status td_matrix_seeded(int64_t rows, int64_t cols, uint32_t seed,
                           td_matrix** out);

int64_t td_matrix_rows(const td_matrix* m);
int64_t td_matrix_cols(const td_matrix* m);
td_status td_matrix_get(const td_matrix* m, int64_t row, int64_t col,
                        int32_t* out);
td_status td_matrix_set(td_matrix* m, int64_t row, int64_t col,
                        int32_t value);
void td_matrix_free(td_matrix* m);

/* -------- simulation -------- */

/* Runs the program against the model. c0 is the initial accumulator and
 * may be NULL for all zeros. */
td_status td_simulate(const td_program* program, const td_model* model,
                      const td_matrix* a, const td_matrix* b,
                      const td_matrix* c0, td_result** out);

/* Cycle report as a JSON object (fixed field set, sorted keys). */
td_status td_result_report_json(const td_result* result, char** out_text);

/* Single counter by report field name, e.g. "makespan" or "send_txns". */
td_status td_result_stat(const td_result* result, const char* field,
                         uint64_t* out);

double td_result_utilization(const td_result* result);

/* Copy of the computed output matrix. */
td_status td_result_matrix(const td_result* result, td_matrix** out);

/* Accelerator occupancy as percentages of the makespan:
 * out[0..4] = load_a, load_b, compute, store, other. */
td_status td_result_breakdown(const td_result* result, double out[5]);

void td_result_free(td_result* result);

/* -------- oracles -------- */

/* result = c0 + a * b in exact int32 arithmetic; c0 may be NULL for zeros. */
td_status td_reference_matmul(const td_matrix* a, const td_matrix* b,
                              const td_matrix* c0, td_matrix** out);

/* Closed-form makespan for the driver variant described by the dims, tile
 * extents and pass names, without building or replaying the program. model
 * may be NULL for the defaults. */
td_status td_analytic_makespan(int64_t m, int64_t n, int64_t k, int64_t tm,
                               int64_t tn, int64_t tk,
                               const char* const* passes, size_t n_passes,
                               const td_model* model, uint64_t* out);

/* Simulates the program on seeded inputs and compares the output against
 * the exact product, once per seed. TD_OK when every seed matches;
 * TD_ERR_VERIFY_FAILED names the first offending seed and element. */
td_status td_verify(const td_program* program, const td_model* model,
                    const uint32_t* seeds, size_t n_seeds);

#ifdef __cplusplus
}
#endif

#endif /* TILEDRIVE_H */
