/* C interface to the rtlcse optimizer library.
 *
 * Every function returns an rtlcse_status. On failure a message describing the
 * error is available from rtlcse_last_error() until the next call on the same
 * thread. Strings returned through char** parameters are owned by the caller
 * and released with rtlcse_string_free(). */
#ifndef RTLCSE_H
#define RTLCSE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define RTLCSE_API __declspec(dllexport)
#else
#define RTLCSE_API __attribute__((visibility("default")))
#endif

typedef enum rtlcse_status {
  RTLCSE_OK = 0,
  RTLCSE_ERR_INVALID_ARGUMENT = 1,
  RTLCSE_ERR_PARSE = 2,
  RTLCSE_ERR_TYPING = 3,
  RTLCSE_ERR_REJECTED = 4,  /* a checker refused a transformation */
  RTLCSE_ERR_VIOLATION = 5, /* difftest found a refinement violation */
  RTLCSE_ERR_INTERNAL = 6
} rtlcse_status;

typedef struct rtlcse_program rtlcse_program;

typedef struct rtlcse_pipeline_options {
  const char *passes; /* comma-separated: unroll,rotate,cse3,selfmove,dce */
  size_t unroll_threshold;
  int cse3_across_calls; /* keep register equations across calls */
  int cse3_glb_moves;
  int trivial_consts;
} rtlcse_pipeline_options;

typedef struct rtlcse_difftest_options {
  uint64_t seed;
  size_t programs;
  size_t inputs;
  uint64_t fuel;
} rtlcse_difftest_options;

typedef enum rtlcse_run_status {
  RTLCSE_RUN_RETURNED = 0,
  RTLCSE_RUN_TRAPPED = 1,
  RTLCSE_RUN_OUT_OF_FUEL = 2
} rtlcse_run_status;

RTLCSE_API const char *rtlcse_last_error(void);
RTLCSE_API const char *rtlcse_status_name(rtlcse_status s);
RTLCSE_API void rtlcse_string_free(char *s);

RTLCSE_API rtlcse_status rtlcse_program_parse(const char *text, rtlcse_program **out);
RTLCSE_API rtlcse_status rtlcse_program_generate(uint64_t seed, uint64_t index, rtlcse_program **out);
RTLCSE_API void rtlcse_program_free(rtlcse_program *p);
RTLCSE_API rtlcse_status rtlcse_program_print(const rtlcse_program *p, int compact, char **out);

RTLCSE_API void rtlcse_pipeline_options_init(rtlcse_pipeline_options *o);
RTLCSE_API void rtlcse_difftest_options_init(rtlcse_difftest_options *o);

/* `invariants` may be NULL; otherwise it receives the per-node invariant dump
 * of every cse3 pass. */
RTLCSE_API rtlcse_status rtlcse_optimize(const rtlcse_program *in, const rtlcse_pipeline_options *o,
                                         rtlcse_program **out, char **invariants);
RTLCSE_API rtlcse_status rtlcse_stats(const rtlcse_program *in, const rtlcse_pipeline_options *o,
                                      int timing, char **report);
RTLCSE_API rtlcse_status rtlcse_typecheck(const rtlcse_program *p, char **report);

/* Arguments use the value syntax: undef, i32:N, i64:N, f32:0xBITS,
 * f64:0xBITS, ptr:SYM+OFF. */
RTLCSE_API rtlcse_status rtlcse_run(const rtlcse_program *p, const char *const *args, size_t nargs,
                                    uint64_t fuel, uint64_t seed, rtlcse_run_status *status,
                                    char **outcome);

/* RTLCSE_OK when accepted, RTLCSE_ERR_REJECTED otherwise; `report` names the
 * first failing node. */
RTLCSE_API rtlcse_status rtlcse_check_dup(const rtlcse_program *orig, const rtlcse_program *transf,
                                          const char *map_json, char **report);

RTLCSE_API rtlcse_status rtlcse_difftest(const rtlcse_difftest_options *d,
                                         const rtlcse_pipeline_options *o, char **report);

/* Random operations on hash-consed sets checked against a naive model. */
RTLCSE_API rtlcse_status rtlcse_hset_audit(uint64_t seed, size_t ops, char **report);

#ifdef __cplusplus
}
#endif

#endif
