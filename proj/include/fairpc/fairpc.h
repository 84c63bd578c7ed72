// Copyright 2026 The fairpc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to fairpc. Every function returning fairpc_status leaves a
 * thread-local message readable through fairpc_last_error() on failure.
 * Objects are opaque and owned by the caller once returned; strings handed
 * out by the library are released with fairpc_string_free. */

#ifndef FAIRPC_FAIRPC_H_
#define FAIRPC_FAIRPC_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(FAIRPC_BUILDING_LIBRARY)
#define FAIRPC_API __declspec(dllexport)
#else
#define FAIRPC_API __declspec(dllimport)
#endif
#else
#define FAIRPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fairpc_status {
  FAIRPC_OK = 0,
  FAIRPC_E_USAGE = 1,
  FAIRPC_E_PARSE = 2,
  FAIRPC_E_SCHEMA = 3,
  FAIRPC_E_STRUCTURE = 4,
  FAIRPC_E_UNSUPPORTED = 5,
  FAIRPC_E_NULL_EVIDENCE = 6,
  FAIRPC_E_ROW_IMPOSSIBLE = 7,
  FAIRPC_E_INCOMPLETE_ASSIGNMENT = 8,
  FAIRPC_E_VOCABULARY = 9,
  FAIRPC_E_BINNING = 10,
  FAIRPC_E_FOLD = 11,
  FAIRPC_E_INSUFFICIENT_DATA = 12,
  FAIRPC_E_GROUP = 13,
  FAIRPC_E_IO = 14,
  FAIRPC_E_INTERNAL = 15
} fairpc_status;

typedef struct fairpc_table fairpc_table;
typedef struct fairpc_model fairpc_model;

FAIRPC_API const char* fairpc_version(void);
FAIRPC_API const char* fairpc_status_name(fairpc_status status);
/* Message of the last failed call on this thread ("" if none). */
FAIRPC_API const char* fairpc_last_error(void);
FAIRPC_API void fairpc_string_free(char* s);

/* 0 restores the default (available parallelism). */
FAIRPC_API void fairpc_set_num_threads(unsigned n);

/* ---- tables ------------------------------------------------------------ */

/* schema_path may be NULL to infer the schema from the file. */
FAIRPC_API fairpc_status fairpc_table_load(const char* csv_path, const char* schema_path,
                                           fairpc_table** out);
FAIRPC_API void fairpc_table_free(fairpc_table* t);
FAIRPC_API size_t fairpc_table_num_rows(const fairpc_table* t);
FAIRPC_API size_t fairpc_table_num_columns(const fairpc_table* t);
FAIRPC_API fairpc_status fairpc_table_save(const fairpc_table* t, const char* csv_path);
FAIRPC_API fairpc_status fairpc_table_schema_json(const fairpc_table* t, char** out);
/* Erases feature cells independently with probability fraction; the
 * sensitive, label and latent-role columns are kept. */
FAIRPC_API fairpc_status fairpc_table_mcar(const fairpc_table* t, double fraction, uint64_t seed,
                                           fairpc_table** out);

/* ---- synthetic data ---------------------------------------------------- */

typedef struct fairpc_synth_config {
  int n_features;
  uint64_t n_samples;
  uint64_t n_test; /* 0: same as n_samples */
  uint64_t seed;
  double phi_s;
  double phi_df;
  double d_mech[4]; /* Pr(D=1 | Df, S) for (1,1), (1,0), (0,1), (0,0) */
  int allow_any_features;
} fairpc_synth_config;

FAIRPC_API void fairpc_synth_config_default(fairpc_synth_config* c);
/* Writes train.csv, test.csv, schema.json and true_circuit.pc. */
FAIRPC_API fairpc_status fairpc_synth(const fairpc_synth_config* c, const char* out_dir);

/* ---- learning ---------------------------------------------------------- */

typedef struct fairpc_learn_config {
  const char* model; /* "fairpc", "nlatpc", "2nb", "latnb" */
  const char* init;  /* "prior", "random" */
  int max_iterations;
  double ll_tolerance;
  double laplace_alpha;
  uint64_t seed;
  int max_splits;
  double validation_fraction;
  int patience;
  double prior_epsilon;
  /* 1: one feature structure for all contexts; 0: one per (S, D) context */
  int shared_structure;
} fairpc_learn_config;

FAIRPC_API void fairpc_learn_config_default(fairpc_learn_config* c);
FAIRPC_API fairpc_status fairpc_learn(const fairpc_table* train, const fairpc_learn_config* c,
                                      fairpc_model** out);
/* JSON object with the EM trace (and the structure trace when learned). */
FAIRPC_API fairpc_status fairpc_model_trace_json(const fairpc_model* m, char** out);

/* ---- models ------------------------------------------------------------ */

FAIRPC_API fairpc_status fairpc_model_load(const char* path, fairpc_model** out);
FAIRPC_API fairpc_status fairpc_model_save(const fairpc_model* m, const char* path);
FAIRPC_API void fairpc_model_free(fairpc_model* m);
FAIRPC_API const char* fairpc_model_kind(const fairpc_model* m);
FAIRPC_API fairpc_status fairpc_model_head(const fairpc_model* m, double* phi_s, double* phi_df,
                                           double d_mech[4]);

/* ---- evaluation -------------------------------------------------------- */

/* Report line as a JSON object. truth_column names a test column; "df" and
 * "d" also select the model's latent and label variables. config_json (may
 * be NULL) is echoed under "config". */
FAIRPC_API fairpc_status fairpc_evaluate(const fairpc_model* m, const fairpc_table* test,
                                         const char* truth_column, int fold,
                                         const char* config_json, char** report_json);
FAIRPC_API fairpc_status fairpc_append_line(const char* path, const char* line);
/* probabilities must hold fairpc_table_num_rows(t) entries. */
FAIRPC_API fairpc_status fairpc_predict(const fairpc_model* m, const fairpc_table* t,
                                        double* probabilities);
/* Test log-likelihood: weighted mean log Pr(row). */
FAIRPC_API fairpc_status fairpc_loglik(const fairpc_model* m, const fairpc_table* t,
                                       double* out);
/* E_data[f|S=1], E_data[f|S=0], E_Q[f|S=1], E_Q[f|S=0]. */
FAIRPC_API fairpc_status fairpc_motivation(double out[4]);

/* Structural audit of a circuit or model file. *passed is 1 when every
 * check passes: smooth, decomposable, deterministic, normalized sum
 * weights and, for fair models, a tying residual within tolerance. */
FAIRPC_API fairpc_status fairpc_check_file(const char* path, double tolerance, int* passed,
                                           char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* FAIRPC_FAIRPC_H_ */
