#ifndef MIP_H
#define MIP_H

/* C interface to the intersection-position toolkit. All returned strings are
 * owned by the handle they came from and stay valid until it is freed.
 * Functions returning mip_status set a thread-local message retrievable via
 * mip_last_error on failure. */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#ifndef MIP_API
#define MIP_API __attribute__((visibility("default")))
#endif

typedef enum mip_status {
  MIP_OK = 0,
  MIP_ERR_INVALID_ARGUMENT = 1,
  MIP_ERR_DIMENSION_MISMATCH = 2,
  MIP_ERR_INVALID_BODY = 3,
  MIP_ERR_UNSUPPORTED = 4,
  MIP_ERR_PRECONDITION = 5,
  MIP_ERR_SINGULAR_POINT = 6,
  MIP_ERR_EMPTY_REGION = 7,
  MIP_ERR_PARSE = 8,
  MIP_ERR_INTERNAL = 9
} mip_status;

typedef struct mip_scenario mip_scenario;
typedef struct mip_report mip_report;

/* Sentinels mean "use the scenario or module default": budget <= 0,
 * seed < 0, tol <= 0, workers <= 0, radii NULL, fd_step <= 0. */
typedef struct mip_run_flags {
  const char* scenario_path;
  long long budget;
  long long seed;
  double tol;
  int workers;
  const double* radii;
  size_t radii_len;
  double fd_step;
} mip_run_flags;

MIP_API const char* mip_version(void);

/* Message for the most recent failure on the calling thread. */
MIP_API const char* mip_last_error(void);

/* Fills every field with its "not set" sentinel. */
MIP_API void mip_run_flags_init(mip_run_flags* flags);

MIP_API mip_status mip_scenario_open(const char* path, mip_scenario** out);
MIP_API mip_status mip_scenario_parse_text(const char* text, const char* origin,
                                           mip_scenario** out);
MIP_API const char* mip_scenario_name(const mip_scenario* s);
MIP_API int mip_scenario_dim(const mip_scenario* s);
/* Normalized JSON echo with defaults filled in. */
MIP_API const char* mip_scenario_echo(const mip_scenario* s);
MIP_API void mip_scenario_free(mip_scenario* s);

/* command: optimize | certify | gradcheck | scan | mu-john | validate.
 * On MIP_OK the report carries the process exit code per the contract:
 * 0 success/pass, 2 certificate fail, 3 optimizer non-convergence. Input
 * errors return a nonzero mip_status instead (callers map those to 1). */
MIP_API mip_status mip_run(const char* command, const mip_run_flags* flags, mip_report** out);

MIP_API int mip_report_exit_code(const mip_report* r);
MIP_API const char* mip_report_json(const mip_report* r);
MIP_API const char* mip_report_summary(const mip_report* r);
MIP_API size_t mip_report_table_count(const mip_report* r);
MIP_API const char* mip_report_table_name(const mip_report* r, size_t i);
MIP_API const char* mip_report_table_content(const mip_report* r, size_t i);
/* Writes report.json plus every table into out_dir, creating it if needed. */
MIP_API mip_status mip_report_write(const mip_report* r, const char* out_dir);
MIP_API void mip_report_free(mip_report* r);

#ifdef __cplusplus
}
#endif

#endif
