#ifndef Q4S_Q4S_H
#define Q4S_Q4S_H

/* C interface of the q4s shared library.
 *
 * Every function returns a q4s_status. On failure a message for the calling
 * thread is available from q4s_last_error() until the next failing call.
 * Objects are opaque handles released with their *_free function; passing
 * NULL to a *_free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(Q4S_BUILDING_LIBRARY)
#define Q4S_API __declspec(dllexport)
#else
#define Q4S_API __declspec(dllimport)
#endif
#else
#define Q4S_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum q4s_status {
    Q4S_OK = 0,
    Q4S_INVALID_ARGUMENT,
    Q4S_INVALID_PARAMS,
    Q4S_LENGTH_MISMATCH,
    Q4S_LENGTH_NOT_DIVISIBLE,
    Q4S_DIMENSION_MISMATCH,
    Q4S_DEGENERATE_INPUT,
    Q4S_TOO_FEW_DETECTIONS,
    Q4S_NO_PEAK,
    Q4S_FIT_DIVERGED,
    Q4S_INSUFFICIENT_INLIERS,
    Q4S_ESTIMATE_NOT_OK,
    Q4S_NO_EDGE,
    Q4S_CONFIG_INVALID,
    Q4S_IO,
    Q4S_PARSE,
    Q4S_SYNC_FAILED,
    Q4S_BUFFER_TOO_SMALL,
    Q4S_INTERNAL
} q4s_status;

Q4S_API const char* q4s_status_name(q4s_status status);
Q4S_API const char* q4s_last_error(void);
Q4S_API const char* q4s_version(void);

/* ---- synchronization strings ---- */

typedef struct q4s_string q4s_string;

Q4S_API q4s_status q4s_string_generate(uint64_t L, uint64_t N1, double lambda, uint64_t seed, q4s_string** out);
Q4S_API q4s_status q4s_string_load(const char* path, q4s_string** out);
Q4S_API q4s_status q4s_string_save(const q4s_string* s, const char* path, int binary);
Q4S_API size_t q4s_string_length(const q4s_string* s);
Q4S_API uint64_t q4s_string_n1(const q4s_string* s);
/* Borrowed pointer, valid until q4s_string_free. */
Q4S_API const int8_t* q4s_string_symbols(const q4s_string* s);
Q4S_API void q4s_string_free(q4s_string* s);

typedef struct q4s_shape {
    double lag0;
    double measured_c0;
    double worst_peak_deviation;
    double worst_offpeak;
    uint64_t worst_offpeak_lag;
    uint64_t offpeak_violations;
    int lag0_ok;
    int peaks_ok;
    int offpeak_ok;
} q4s_shape;

/* Tolerances <= 0 select the library defaults. */
Q4S_API q4s_status q4s_string_shape(const q4s_string* s, double peak_tol, double offpeak_tol, q4s_shape* out);

/* ---- offset recovery ---- */

typedef struct q4s_offset {
    uint64_t m_opt;
    uint64_t u_opt;
    uint64_t j_opt;
    double peak;
    double column0_peak;
    double delta;
    int success;
} q4s_offset;

/* n1 = 0 uses the string's own N1. Bob's symbols must be -1, 0 or +1. */
Q4S_API q4s_status q4s_find_offset(const q4s_string* alice, uint64_t n1, const int8_t* bob, size_t len,
                                   double threshold, q4s_offset* out);

/* Reads a ternary symbol file. Call with buf = NULL to get the length in
 * *len; a second call with a buffer of that size fills it. */
Q4S_API q4s_status q4s_read_ternary(const char* path, int8_t* buf, size_t cap, size_t* len);

/* ---- configuration (key=value, shared by simulate/sync/sweep) ---- */

typedef struct q4s_config q4s_config;

Q4S_API q4s_status q4s_config_new(q4s_config** out);
Q4S_API q4s_status q4s_config_set(q4s_config* cfg, const char* key, const char* value);
Q4S_API q4s_status q4s_config_load(q4s_config* cfg, const char* path);
Q4S_API void q4s_config_free(q4s_config* cfg);

/* ---- simulation ---- */

/* Simulates the configured channel and writes the detection CSV, the truth
 * sidecar and Alice's string. Any path may be NULL to skip that file. */
Q4S_API q4s_status q4s_simulate(const q4s_config* cfg, const char* detections_path, const char* truth_path,
                                const char* alice_path, uint64_t* detections);

/* ---- period recovery ---- */

typedef struct q4s_period {
    double window_start;
    double window_length;
    double tau_B;
    double tau_guess;
    double slope;
    double phase;
    double rms_tie;
    double rms_tie_coarse;
    uint64_t detections;
    uint64_t collisions;
    int ok;
    q4s_status status; /* per-window failure, Q4S_OK otherwise */
} q4s_period;

typedef struct q4s_periods q4s_periods;

/* Splits a detection CSV into windows of T_acq and recovers the period of
 * each. Window failures are recorded per window, not returned. */
Q4S_API q4s_status q4s_recover_periods(const char* detections_path, double tau_A, double T_acq, double sigma,
                                       double trim, uint64_t fft_samples, q4s_periods** out);
Q4S_API size_t q4s_periods_count(const q4s_periods* p);
Q4S_API q4s_status q4s_periods_get(const q4s_periods* p, size_t index, q4s_period* out);
Q4S_API void q4s_periods_free(q4s_periods* p);

/* ---- end-to-end synchronization ---- */

typedef struct q4s_report q4s_report;

/* Q4S_OK means the run completed; check q4s_report_synchronized. */
Q4S_API q4s_status q4s_run_sync(const q4s_config* cfg, q4s_report** out);
Q4S_API int q4s_report_synchronized(const q4s_report* r);
/* Q4S_OK when synchronized, otherwise the failure cause. */
Q4S_API q4s_status q4s_report_failure(const q4s_report* r);
/* key=value lines; borrowed, valid until q4s_report_free. */
Q4S_API const char* q4s_report_summary(const q4s_report* r);
Q4S_API q4s_status q4s_report_offset(const q4s_report* r, q4s_offset* out);
Q4S_API double q4s_report_alignment_accuracy(const q4s_report* r);
Q4S_API unsigned q4s_report_offset_calls(const q4s_report* r);
Q4S_API q4s_status q4s_report_write_csv(const q4s_report* r, const char* path);
/* Writes "t_seconds,alice_index" for every indexed detection; the run must
 * have been configured with keep_indices=1. */
Q4S_API q4s_status q4s_report_write_indices(const q4s_report* r, const char* path);
Q4S_API void q4s_report_free(q4s_report* r);

/* ---- sweep and bench ---- */

typedef struct q4s_sweep_cell {
    double qber;
    double bits;
    double success_fraction;
} q4s_sweep_cell;

/* cells must hold nq * nb entries (qber-major); out_path may be NULL. */
Q4S_API q4s_status q4s_run_sweep(const q4s_config* base, const double* qbers, size_t nq, const double* bits,
                                 size_t nb, unsigned repetitions, double background_rate, unsigned threads,
                                 const char* out_path, q4s_sweep_cell* cells);

typedef struct q4s_bench_row {
    uint64_t L;
    uint64_t N1;
    uint64_t stage1_ops;
    uint64_t stage2_ops;
    uint64_t baseline_ops;
    uint64_t wall_ns;
    uint64_t baseline_wall_ns;
    int offsets_agree;
} q4s_bench_row;

/* n1 = 0 picks the divisor of L closest to log2(L). rows must hold n entries;
 * out_path may be NULL. */
Q4S_API q4s_status q4s_run_bench(const uint64_t* lengths, size_t n, uint64_t n1, uint64_t seed,
                                 const char* out_path, q4s_bench_row* rows);

#ifdef __cplusplus
}
#endif

#endif
