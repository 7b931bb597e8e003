#include "session.hpp"

#include <json.hpp>

namespace hypersynth {

const char* version_string() { return "0.1.0"; }

std::string status_name(SynthesisStatus s) {
    switch (s) {
        case SynthesisStatus::OptimumFound: return "optimum-found";
        case SynthesisStatus::ThresholdSatisfied: return "threshold-satisfied";
        case SynthesisStatus::Infeasible: return "infeasible";
        case SynthesisStatus::BudgetExhausted: return "budget-exhausted";
    }
    return "?";
}

std::string synthesis_report_json(const EvalContext& ctx, const SynthesisResult& r,
                                  const SynthesisOptions& opts, const std::string& command) {
    nlohmann::json j;
    j["command"] = command;
    j["status"] = status_name(r.status);
    j["direction"] = r.maximize ? "max" : "min";
    j["has_policy"] = r.has_tuple;
    if (r.has_tuple) j["value"] = r.best_value;
    j["upper_bound"] = r.upper_bound;
    j["memory_bits"] = opts.memory_bits;
    j["seed"] = opts.seed;
    j["epsilon"] = opts.epsilon;
    j["instance_values"] = r.instance_values;
    j["stats"] = {
        {"nodes", r.stats.nodes},
        {"splits", r.stats.splits},
        {"pruned", r.stats.pruned},
        {"time_to_best_s", r.stats.time_to_best_s},
        {"total_time_s", r.stats.total_time_s},
        {"product_states", r.stats.product_states},
    };
    if (r.has_tuple) j["policy"] = format_policy_tuple(ctx, r.best);
    return j.dump(2) + "\n";
}

std::string check_report_json(const EvalContext& ctx, const Evaluation& ev, bool uniform) {
    nlohmann::json j;
    j["command"] = "check";
    j["uniform_baseline"] = uniform;
    j["instance_values"] = ev.instance_values;
    j["satisfied"] = ev.satisfied;
    if (has_optimization(ctx.spec)) j["value"] = ev.objective;
    return j.dump(2) + "\n";
}

int exit_code_for(const SynthesisResult& r) {
    switch (r.status) {
        case SynthesisStatus::OptimumFound:
        case SynthesisStatus::ThresholdSatisfied:
            return 0;
        case SynthesisStatus::Infeasible:
            return 2;
        case SynthesisStatus::BudgetExhausted:
            return r.has_tuple ? 3 : 4;
    }
    return 1;
}

}  // namespace hypersynth
