#include "hypersynth.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "benchgen.hpp"
#include "decmdp.hpp"
#include "session.hpp"
#include "synthesis.hpp"

using namespace hypersynth;

struct hs_model {
    Mdp mdp;
};
struct hs_spec {
    HyperFormula formula;
};
struct hs_result {
    EvalContext ctx;
    SynthesisResult result;
    SynthesisOptions opts;
    std::string command;
};

namespace {

thread_local std::string g_last_error;

hs_status fail(hs_status code, const std::string& msg) {
    g_last_error = msg;
    return code;
}

template <typename Fn>
hs_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const FormulaError& e) {
        return fail(HS_ERR_PARSE, e.what());
    } catch (const SpecError& e) {
        return fail(HS_ERR_INVALID, e.what());
    } catch (const ModelError& e) {
        return fail(HS_ERR_PARSE, e.what());
    } catch (const DecExportError& e) {
        return fail(HS_ERR_UNSUPPORTED, e.what());
    } catch (const AutomatonError& e) {
        return fail(HS_ERR_LIMIT, e.what());
    } catch (const ProductError& e) {
        return fail(HS_ERR_LIMIT, e.what());
    } catch (const BenchmarkError& e) {
        return fail(HS_ERR_INVALID, e.what());
    } catch (const SynthesisError& e) {
        return fail(HS_ERR_INVALID, e.what());
    } catch (const std::exception& e) {
        return fail(HS_ERR_INTERNAL, e.what());
    }
}

hs_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
    if (needed) *needed = text.size() + 1;
    if (buf && cap > 0) {
        size_t n = std::min(cap - 1, text.size());
        std::memcpy(buf, text.data(), n);
        buf[n] = '\0';
    }
    return HS_OK;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        out += l;
        out += '\n';
    }
    return out;
}

SynthesisOptions to_options(const hs_synth_options* o) {
    SynthesisOptions opts;
    if (!o) return opts;
    opts.memory_bits = o->memory_bits;
    if (o->time_budget_s > 0) opts.time_budget_s = o->time_budget_s;
    if (o->epsilon > 0) opts.epsilon = o->epsilon;
    opts.seed = o->seed;
    opts.workers = o->workers ? o->workers : 1;
    opts.initial_threshold = o->initial_threshold;
    if (o->trace_path) opts.trace_path = o->trace_path;
    if (o->csv_path) opts.csv_path = o->csv_path;
    if (o->state_budget) opts.product_limits.max_states = o->state_budget;
    if (o->oracle_cap) opts.oracle_cap = o->oracle_cap;
    return opts;
}

}  // namespace

extern "C" {

const char* hs_version(void) { return version_string(); }
const char* hs_last_error(void) { return g_last_error.c_str(); }

hs_status hs_model_load(const char* path, hs_model** out) {
    if (!path || !out) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* m = new hs_model{load_model(path)};
        *out = m;
        return HS_OK;
    });
}

hs_status hs_model_parse(const char* text, hs_model** out) {
    if (!text || !out) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* m = new hs_model{parse_model_text(text)};
        *out = m;
        return HS_OK;
    });
}

void hs_model_free(hs_model* m) { delete m; }

uint32_t hs_model_num_states(const hs_model* m) { return m ? m->mdp.num_states : 0; }
uint32_t hs_model_num_actions(const hs_model* m) { return m ? m->mdp.num_actions() : 0; }

hs_status hs_model_validate(const hs_model* m, char* buf, size_t cap, size_t* needed) {
    if (!m) return fail(HS_ERR_INVALID, "null model");
    return guarded([&] { return copy_out(join_lines(validate_mdp(m->mdp)), buf, cap, needed); });
}

hs_status hs_spec_load(const char* path, hs_spec** out) {
    if (!path || !out) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* s = new hs_spec{load_spec(path)};
        *out = s;
        return HS_OK;
    });
}

hs_status hs_spec_parse(const char* text, hs_spec** out) {
    if (!text || !out) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        auto* s = new hs_spec{parse_spec(text)};
        *out = s;
        return HS_OK;
    });
}

void hs_spec_free(hs_spec* s) { delete s; }

uint32_t hs_spec_num_agents(const hs_spec* s) { return s ? s->formula.agent_count() : 0; }
uint32_t hs_spec_num_policy_vars(const hs_spec* s) {
    return s ? static_cast<uint32_t>(s->formula.policy_vars.size()) : 0;
}
int hs_spec_is_dec_fragment(const hs_spec* s) { return s && is_dec_fragment(s->formula) ? 1 : 0; }

hs_status hs_spec_check(const hs_spec* s, const hs_model* m, char* buf, size_t cap, size_t* needed) {
    if (!s || !m) return fail(HS_ERR_INVALID, "null argument");
    return guarded(
        [&] { return copy_out(join_lines(check_well_formed(s->formula, m->mdp)), buf, cap, needed); });
}

void hs_synth_options_init(hs_synth_options* opts) {
    if (!opts) return;
    opts->memory_bits = 0;
    opts->time_budget_s = 3600.0;
    opts->epsilon = 1e-8;
    opts->seed = 0;
    opts->workers = 1;
    opts->initial_threshold = std::numeric_limits<double>::quiet_NaN();
    opts->trace_path = nullptr;
    opts->csv_path = nullptr;
    opts->hoa_path = nullptr;
    opts->state_budget = 0;
    opts->oracle_cap = 0;
}

namespace {

hs_status run_search(const hs_model* m, const hs_spec* s, const hs_synth_options* o, hs_result** out,
                     bool oracle) {
    if (!m || !s || !out) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        SynthesisOptions opts = to_options(o);
        Dra override_dra;
        if (o && o->hoa_path) {
            override_dra = load_hoa(o->hoa_path);
            opts.override_dra = &override_dra;
        }
        auto* r = new hs_result;
        r->opts = opts;
        r->command = oracle ? "oracle" : "synth";
        try {
            r->result = oracle ? oracle_enumerate(m->mdp, s->formula, opts)
                               : synthesize(m->mdp, s->formula, opts);
            r->ctx = make_eval_context(m->mdp, s->formula, opts.memory_bits, opts.override_dra,
                                       opts.automata_limits);
        } catch (...) {
            delete r;
            throw;
        }
        r->opts.override_dra = nullptr;  // owned stack memory; not needed for reports
        *out = r;
        return HS_OK;
    });
}

}  // namespace

hs_status hs_synthesize(const hs_model* m, const hs_spec* s, const hs_synth_options* o,
                        hs_result** out) {
    return run_search(m, s, o, out, false);
}

hs_status hs_oracle(const hs_model* m, const hs_spec* s, const hs_synth_options* o, hs_result** out) {
    return run_search(m, s, o, out, true);
}

void hs_result_free(hs_result* r) { delete r; }

hs_synth_outcome hs_result_outcome(const hs_result* r) {
    switch (r->result.status) {
        case SynthesisStatus::OptimumFound: return HS_SYNTH_OPTIMUM;
        case SynthesisStatus::ThresholdSatisfied: return HS_SYNTH_THRESHOLD;
        case SynthesisStatus::Infeasible: return HS_SYNTH_INFEASIBLE;
        case SynthesisStatus::BudgetExhausted: return HS_SYNTH_BUDGET;
    }
    return HS_SYNTH_INFEASIBLE;
}

int hs_result_has_policy(const hs_result* r) { return r->result.has_tuple ? 1 : 0; }
double hs_result_value(const hs_result* r) { return r->result.best_value; }
double hs_result_upper_bound(const hs_result* r) { return r->result.upper_bound; }
double hs_result_time_to_best_s(const hs_result* r) { return r->result.stats.time_to_best_s; }
double hs_result_total_time_s(const hs_result* r) { return r->result.stats.total_time_s; }
uint64_t hs_result_nodes(const hs_result* r) { return r->result.stats.nodes; }
uint64_t hs_result_splits(const hs_result* r) { return r->result.stats.splits; }
uint64_t hs_result_product_states(const hs_result* r) { return r->result.stats.product_states; }

hs_status hs_result_policy_text(const hs_result* r, char* buf, size_t cap, size_t* needed) {
    if (!r) return fail(HS_ERR_INVALID, "null result");
    if (!r->result.has_tuple) return fail(HS_ERR_INVALID, "result carries no policy");
    return guarded([&] { return copy_out(format_policy_tuple(r->ctx, r->result.best), buf, cap, needed); });
}

hs_status hs_result_report_json(const hs_result* r, char* buf, size_t cap, size_t* needed) {
    if (!r) return fail(HS_ERR_INVALID, "null result");
    return guarded([&] {
        return copy_out(synthesis_report_json(r->ctx, r->result, r->opts, r->command), buf, cap,
                        needed);
    });
}

hs_status hs_check_policy(const hs_model* m, const hs_spec* s, const char* policy_text,
                          uint32_t memory_bits, double* value_out, int* satisfied_out,
                          char* report_buf, size_t cap, size_t* needed) {
    if (!m || !s || !policy_text) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        EvalContext ctx = make_eval_context(m->mdp, s->formula, memory_bits);
        PolicyTuple t = parse_policy_tuple(ctx, policy_text);
        Evaluation ev = evaluate_policy_tuple(ctx, t);
        if (value_out)
            *value_out = has_optimization(ctx.spec)
                             ? ev.objective
                             : (ev.instance_values.empty() ? 0.0 : ev.instance_values.front());
        if (satisfied_out) *satisfied_out = ev.satisfied ? 1 : 0;
        if (report_buf || needed) return copy_out(check_report_json(ctx, ev, false), report_buf, cap, needed);
        return HS_OK;
    });
}

hs_status hs_check_uniform(const hs_model* m, const hs_spec* s, uint32_t memory_bits,
                           double* value_out, int* satisfied_out, char* report_buf, size_t cap,
                           size_t* needed) {
    if (!m || !s) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        EvalContext ctx = make_eval_context(m->mdp, s->formula, memory_bits);
        Evaluation ev = evaluate_uniform_random(ctx);
        if (value_out)
            *value_out = has_optimization(ctx.spec)
                             ? ev.objective
                             : (ev.instance_values.empty() ? 0.0 : ev.instance_values.front());
        if (satisfied_out) *satisfied_out = ev.satisfied ? 1 : 0;
        if (report_buf || needed) return copy_out(check_report_json(ctx, ev, true), report_buf, cap, needed);
        return HS_OK;
    });
}

hs_status hs_export_decmdp(const hs_model* m, const hs_spec* s, uint32_t memory_bits,
                           const char* path) {
    if (!m || !s || !path) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        if (!is_dec_fragment(s->formula))
            throw DecExportError("specification is outside the decentralized fragment");
        EvalContext ctx = make_eval_context(m->mdp, s->formula, memory_bits);
        ProductMdp p = sync_product(ctx.work, ctx.dras[0], ctx.expansion.leaves);
        export_dpomdp(p, ctx.spec, path);
        return HS_OK;
    });
}

hs_status hs_generate_benchmark(const char* kind, uint32_t width, uint32_t height,
                                const char* model_path, const char* spec_path,
                                const char* meta_path) {
    if (!kind || !model_path || !spec_path) return fail(HS_ERR_INVALID, "null argument");
    return guarded([&] {
        Benchmark b = gen_named_benchmark(kind, width, height);
        {
            std::ofstream out(model_path);
            if (!out) throw BenchmarkError(std::string("cannot open '") + model_path + "'");
            emit_model(b.model, out);
        }
        {
            std::ofstream out(spec_path);
            if (!out) throw BenchmarkError(std::string("cannot open '") + spec_path + "'");
            out << b.spec_text;
        }
        if (meta_path) {
            std::ofstream out(meta_path);
            if (!out) throw BenchmarkError(std::string("cannot open '") + meta_path + "'");
            out << b.metadata_json();
        }
        return HS_OK;
    });
}

}  // extern "C"
