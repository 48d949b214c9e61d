#ifndef NARRAMETRIC_H
#define NARRAMETRIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NmStatus {
  NM_STATUS_OK = 0,
  NM_STATUS_NULL_POINTER = 1,
  NM_STATUS_INVALID_UTF8 = 2,
  NM_STATUS_INVALID_ARGUMENT = 3,
  NM_STATUS_UNDEFINED = 4,
  NM_STATUS_PROVIDER = 5,
  NM_STATUS_PANIC = 6,
} NmStatus;

// Opaque evaluator: segmenter, lexicons, shuffle policy and provider.
typedef struct NmEvaluator NmEvaluator;

typedef struct NmMeasure {
  int32_t defined;
  double value;
} NmMeasure;

typedef struct NmMetrics {
  struct NmMeasure ppl;
  struct NmMeasure dist2;
  struct NmMeasure ttr;
  struct NmMeasure vr;
  struct NmMeasure cd;
  struct NmMeasure fdr;
  struct NmMeasure csr;
  struct NmMeasure cecpr;
  struct NmMeasure dcpr;
  struct NmMeasure ccpr;
  struct NmMeasure ttcpr;
  struct NmMeasure vcpr;
} NmMetrics;

typedef struct NmTextStats {
  size_t words;
  size_t sentences;
  struct NmMeasure dist2;
  double ttr;
  double vr;
  double cr;
  double cer;
} NmTextStats;

typedef struct NmDecayFit {
  double a;
  double b;
  double c;
  double r;
  double r_squared;
  double rmse;
} NmDecayFit;

typedef struct NmFriedman {
  double chi2;
  size_t df;
  double p;
} NmFriedman;

// Message for the last failed call on this thread, or NULL. The pointer
// stays valid until the next call into the library from the same thread.
const char *nm_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *nm_version(void);

// Evaluator backed by the logprob sidecar at `endpoint`. `shuffles == 0`
// keeps the default shuffle count.
enum NmStatus nm_evaluator_new_http(const char *endpoint,
                                    uint64_t seed,
                                    size_t shuffles,
                                    struct NmEvaluator **out);

// Evaluator backed by the offline bigram-cache mock scorer.
enum NmStatus nm_evaluator_new_mock(uint64_t seed, size_t shuffles, struct NmEvaluator **out);

// Releases an evaluator. NULL is ignored.
void nm_evaluator_free(struct NmEvaluator *handle);

// All twelve metrics for one text.
enum NmStatus nm_evaluate(const struct NmEvaluator *handle,
                          const char *text,
                          struct NmMetrics *out);

// Surface statistics with the default tokenizer and lexicons.
enum NmStatus nm_text_stats(const char *text, struct NmTextStats *out);

// Fits `y(x) = A exp(-b x) + C` to `values[0..len]` (x = 1..len).
// Returns `NM_STATUS_UNDEFINED` when the fit is undefined.
enum NmStatus nm_fit_decay(const double *values, size_t len, struct NmDecayFit *out);

// Upper tail of the studentized range with infinite degrees of freedom.
enum NmStatus nm_studentized_range_sf(double q, size_t k, double *out);

// Critical difference for `k` methods over `n` datasets.
enum NmStatus nm_critical_difference(size_t k, size_t n, double alpha, double *out);

// Friedman test over a row-major `n_datasets x k` value matrix. NaN marks
// a missing cell (ranked equal-last); `higher_is_better` sets direction.
enum NmStatus nm_friedman(const double *values,
                          size_t n_datasets,
                          size_t k,
                          bool higher_is_better,
                          bool tie_correction,
                          struct NmFriedman *out);

#endif  /* NARRAMETRIC_H */
