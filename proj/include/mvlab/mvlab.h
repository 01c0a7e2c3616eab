/* C interface to the mvlab simulation library. */
#ifndef MVLAB_H
#define MVLAB_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MVL_API __declspec(dllexport)
#else
#define MVL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mvl_config mvl_config;
typedef struct mvl_result mvl_result;

enum {
  MVL_OK = 0,
  MVL_VERDICT_FAIL = 1,   /* run completed, verdict negative */
  MVL_ERR_CONFIG = 2,
  MVL_ERR_DIVERGENCE = 3,
  MVL_ERR_DOMAIN = 4,
  MVL_ERR_IO = 5,
  MVL_ERR_NONCONVERGENCE = 6,
  MVL_ERR_SIZE = 7,
  MVL_ERR_ARGUMENT = 8,
  MVL_ERR_INTERNAL = 9
};

MVL_API const char* mvl_version(void);

/* Message of the last failing call on this thread ("" if none). */
MVL_API const char* mvl_last_error(void);
/* Individual violations of the last failed config parse on this thread. */
MVL_API size_t mvl_last_violation_count(void);
MVL_API const char* mvl_last_violation(size_t index);

MVL_API int mvl_config_parse(const char* text, mvl_config** out);
MVL_API int mvl_config_load(const char* path, mvl_config** out);
MVL_API void mvl_config_free(mvl_config* config);
MVL_API int mvl_config_set_seed(mvl_config* config, uint64_t seed);
MVL_API uint64_t mvl_config_seed(const mvl_config* config);
MVL_API uint64_t mvl_config_hash(const mvl_config* config);
MVL_API size_t mvl_config_warning_count(const mvl_config* config);
MVL_API const char* mvl_config_warning(const mvl_config* config, size_t index);

/* 1 if name is a known subcommand. */
MVL_API int mvl_subcommand_valid(const char* name);

/* Runs a subcommand, writing artifacts to out_dir. Returns MVL_OK or
   MVL_VERDICT_FAIL with *out set, or an error code with *out NULL. */
MVL_API int mvl_run(const mvl_config* config, const char* subcommand, const char* out_dir, int jobs,
                    mvl_result** out);
MVL_API int mvl_result_passed(const mvl_result* result);
MVL_API const char* mvl_result_summary_json(const mvl_result* result);
MVL_API void mvl_result_free(mvl_result* result);

/* Exponent of the propagation-of-chaos rate n^e. */
MVL_API int mvl_phi_rate(double p, double beta, int d, double* out);

/* Exact W_p between two n-point clouds stored row-major (n x dim). */
MVL_API int mvl_wasserstein(const double* x, const double* y, size_t n, int dim, double p,
                            double* out);

#ifdef __cplusplus
}
#endif

#endif
