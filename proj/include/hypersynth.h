/* hypersynth C API: decentralized policy synthesis for probabilistic
 * hyperproperties over MDPs.
 *
 * All functions returning hs_status set a thread-local message retrievable
 * via hs_last_error() on failure. Objects are created through hs_*_load /
 * hs_*_parse and released with the matching hs_*_free; handles are opaque.
 *
 * Text outputs use the copy-out convention: pass a buffer and its capacity;
 * *needed receives the full length including the terminating NUL. A NULL
 * buffer (or a short one) still reports the required size.
 */
#ifndef HYPERSYNTH_H
#define HYPERSYNTH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hs_status {
    HS_OK = 0,
    HS_ERR_PARSE = 1,       /* malformed model / specification / policy text */
    HS_ERR_INVALID = 2,     /* well-formedness or argument violations */
    HS_ERR_UNSUPPORTED = 3, /* outside a supported fragment or format */
    HS_ERR_LIMIT = 4,       /* a construction cap or budget was exceeded */
    HS_ERR_IO = 5,
    HS_ERR_INTERNAL = 6,
} hs_status;

typedef enum hs_synth_outcome {
    HS_SYNTH_OPTIMUM = 0,    /* search space exhausted; incumbent is optimal */
    HS_SYNTH_THRESHOLD = 1,  /* a tuple satisfying the thresholds was found */
    HS_SYNTH_INFEASIBLE = 2, /* proven that no policy tuple satisfies */
    HS_SYNTH_BUDGET = 3,     /* time budget expired */
} hs_synth_outcome;

typedef struct hs_model hs_model;
typedef struct hs_spec hs_spec;
typedef struct hs_result hs_result;

const char* hs_version(void);
const char* hs_last_error(void);

/* --- models (plain-text MDP format) --- */

hs_status hs_model_load(const char* path, hs_model** out);
hs_status hs_model_parse(const char* text, hs_model** out);
void hs_model_free(hs_model* m);
uint32_t hs_model_num_states(const hs_model* m);
uint32_t hs_model_num_actions(const hs_model* m);
/* newline-separated invariant violations; empty = valid */
hs_status hs_model_validate(const hs_model* m, char* buf, size_t cap, size_t* needed);

/* --- specifications --- */

hs_status hs_spec_load(const char* path, hs_spec** out);
hs_status hs_spec_parse(const char* text, hs_spec** out);
void hs_spec_free(hs_spec* s);
uint32_t hs_spec_num_agents(const hs_spec* s);
uint32_t hs_spec_num_policy_vars(const hs_spec* s);
int hs_spec_is_dec_fragment(const hs_spec* s);
/* newline-separated well-formedness issues against a model; empty = ok */
hs_status hs_spec_check(const hs_spec* s, const hs_model* m, char* buf, size_t cap, size_t* needed);

/* --- synthesis --- */

typedef struct hs_synth_options {
    uint32_t memory_bits;     /* 0..2 */
    double time_budget_s;     /* > 0 */
    double epsilon;           /* value-iteration threshold */
    uint64_t seed;            /* RNG seed; fixes traces and reports */
    uint32_t workers;         /* 1 = deterministic exploration */
    double initial_threshold; /* reference incumbent for optimization; NaN = none */
    const char* trace_path;   /* per-node exploration log; NULL = off */
    const char* csv_path;     /* (time, incumbent) anytime curve; NULL = off */
    const char* hoa_path;     /* DRA override (HOA v1, Rabin); NULL = built-in */
    uint64_t state_budget;    /* product state cap; 0 = default / env */
    uint64_t oracle_cap;      /* enumeration cap for hs_oracle; 0 = default */
} hs_synth_options;

void hs_synth_options_init(hs_synth_options* opts);

hs_status hs_synthesize(const hs_model* m, const hs_spec* s, const hs_synth_options* opts,
                        hs_result** out);
/* brute-force enumeration of all policy tuples; desk-scale reference */
hs_status hs_oracle(const hs_model* m, const hs_spec* s, const hs_synth_options* opts,
                    hs_result** out);

void hs_result_free(hs_result* r);
hs_synth_outcome hs_result_outcome(const hs_result* r);
int hs_result_has_policy(const hs_result* r);
double hs_result_value(const hs_result* r);
double hs_result_upper_bound(const hs_result* r);
double hs_result_time_to_best_s(const hs_result* r);
double hs_result_total_time_s(const hs_result* r);
uint64_t hs_result_nodes(const hs_result* r);
uint64_t hs_result_splits(const hs_result* r);
uint64_t hs_result_product_states(const hs_result* r);
/* policy tuple in the policy-file format */
hs_status hs_result_policy_text(const hs_result* r, char* buf, size_t cap, size_t* needed);
hs_status hs_result_report_json(const hs_result* r, char* buf, size_t cap, size_t* needed);

/* --- policy evaluation --- */

/* Evaluate a policy tuple file against the specification. value_out receives
 * the objective (optimization specs) or the first constraint value;
 * satisfied_out the Boolean verdict for threshold specs. */
hs_status hs_check_policy(const hs_model* m, const hs_spec* s, const char* policy_text,
                          uint32_t memory_bits, double* value_out, int* satisfied_out, char* report_buf,
                          size_t cap, size_t* needed);
/* Uniform-random baseline (each agent picks uniformly in every state). */
hs_status hs_check_uniform(const hs_model* m, const hs_spec* s, uint32_t memory_bits,
                           double* value_out, int* satisfied_out, char* report_buf, size_t cap,
                           size_t* needed);

/* --- decentralized export --- */

hs_status hs_export_decmdp(const hs_model* m, const hs_spec* s, uint32_t memory_bits,
                           const char* path);

/* --- benchmark generation --- */

hs_status hs_generate_benchmark(const char* kind, uint32_t width, uint32_t height,
                                const char* model_path, const char* spec_path,
                                const char* meta_path);

#ifdef __cplusplus
}
#endif

#endif /* HYPERSYNTH_H */
