// Command-line front end; drives the core exclusively through the C API.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypersynth.h"

namespace {

int die(hs_status, const std::string& what) {
    std::cerr << "error: " << what << ": " << hs_last_error() << "\n";
    return 1;
}

struct ModelHandle {
    hs_model* m = nullptr;
    ~ModelHandle() { hs_model_free(m); }
};
struct SpecHandle {
    hs_spec* s = nullptr;
    ~SpecHandle() { hs_spec_free(s); }
};
struct ResultHandle {
    hs_result* r = nullptr;
    ~ResultHandle() { hs_result_free(r); }
};

std::string fetch_text(hs_status (*fn)(const hs_result*, char*, size_t, size_t*), const hs_result* r) {
    size_t needed = 0;
    fn(r, nullptr, 0, &needed);
    std::string buf(needed, '\0');
    fn(r, buf.data(), buf.size(), &needed);
    buf.resize(needed ? needed - 1 : 0);
    return buf;
}

bool write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) return false;
    out << text;
    return static_cast<bool>(out);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int load_inputs(const std::string& model_path, const std::string& spec_path, ModelHandle& model,
                SpecHandle& spec) {
    if (hs_status st = hs_model_load(model_path.c_str(), &model.m); st != HS_OK)
        return die(st, "loading model '" + model_path + "'");
    if (hs_status st = hs_spec_load(spec_path.c_str(), &spec.s); st != HS_OK)
        return die(st, "loading specification '" + spec_path + "'");
    size_t needed = 0;
    hs_spec_check(spec.s, model.m, nullptr, 0, &needed);
    if (needed > 1) {
        std::string report(needed, '\0');
        hs_spec_check(spec.s, model.m, report.data(), report.size(), &needed);
        std::cerr << "error: specification is not well-formed for this model:\n" << report.c_str();
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hypersynth: decentralized policy synthesis for probabilistic hyperproperties"};
    app.require_subcommand(1);

    // shared options
    std::string model_path, spec_path, out_report, trace_path, csv_path, hoa_path, policy_out;
    unsigned mem = 0, workers = 1;
    double budget = 3600.0, eps = 1e-8;
    uint64_t seed = 0, state_budget = 0;
    double threshold = std::numeric_limits<double>::quiet_NaN();

    auto add_common = [&](CLI::App* cmd, bool with_search) {
        cmd->add_option("model", model_path, "model file")->required();
        cmd->add_option("spec", spec_path, "specification file")->required();
        cmd->add_option("--mem", mem, "memory bits per agent (0-2)")->check(CLI::Range(0u, 2u));
        if (with_search) {
            cmd->add_option("--budget", budget, "time budget in seconds");
            cmd->add_option("--eps", eps, "value-iteration threshold");
            cmd->add_option("--seed", seed, "random seed");
            cmd->add_option("--workers", workers, "parallel exploration workers");
            cmd->add_option("--hoa", hoa_path, "override the built-in automaton (HOA file)");
            cmd->add_option("--trace", trace_path, "write the exploration trace log");
            cmd->add_option("--csv", csv_path, "write the (time, incumbent) anytime curve");
            cmd->add_option("--threshold", threshold, "reference incumbent value");
            cmd->add_option("--state-budget", state_budget, "product state cap");
            cmd->add_option("--policy-out", policy_out, "write the synthesized policy tuple");
        }
        cmd->add_option("--out", out_report, "write the JSON report");
    };

    auto* synth = app.add_subcommand("synth", "abstraction-refinement synthesis");
    add_common(synth, true);
    auto* oracle = app.add_subcommand("oracle", "brute-force enumeration (desk-scale reference)");
    add_common(oracle, true);

    auto* check = app.add_subcommand("check", "evaluate a policy tuple");
    std::string policy_path;
    bool uniform = false;
    add_common(check, false);
    check->add_option("--policy", policy_path, "policy tuple file");
    check->add_flag("--uniform", uniform, "evaluate the uniform-random baseline instead");

    auto* expo = app.add_subcommand("export-decmdp", "export the decentralized fragment as .dpomdp");
    std::string export_path;
    add_common(expo, false);
    expo->add_option("--to", export_path, "output .dpomdp path")->required();

    auto* gen = app.add_subcommand("gen", "generate a grid-world benchmark");
    std::string kind, out_prefix = "benchmark";
    unsigned width = 4, height = 4;
    gen->add_option("kind", kind,
                    "meet | meetR | race-2 | race-3 | opac | iso | robust | noninter")
        ->required();
    gen->add_option("--width", width, "grid width");
    gen->add_option("--height", height, "grid height");
    gen->add_option("--out", out_prefix, "output path prefix");

    CLI11_PARSE(app, argc, argv);

    if (gen->parsed()) {
        std::string mp = out_prefix + ".mdp", sp = out_prefix + ".spec", jp = out_prefix + ".json";
        if (hs_status st = hs_generate_benchmark(kind.c_str(), width, height, mp.c_str(), sp.c_str(),
                                                 jp.c_str());
            st != HS_OK)
            return die(st, "generating benchmark");
        std::cout << "wrote " << mp << ", " << sp << ", " << jp << "\n";
        return 0;
    }

    ModelHandle model;
    SpecHandle spec;
    if (int rc = load_inputs(model_path, spec_path, model, spec); rc != 0) return rc;

    if (check->parsed()) {
        double value = 0.0;
        int satisfied = 0;
        size_t needed = 0;
        hs_status st;
        std::string report;
        if (uniform) {
            st = hs_check_uniform(model.m, spec.s, mem, &value, &satisfied, nullptr, 0, &needed);
            if (st == HS_OK) {
                report.resize(needed);
                st = hs_check_uniform(model.m, spec.s, mem, &value, &satisfied, report.data(),
                                      report.size(), &needed);
            }
        } else {
            if (policy_path.empty()) {
                std::cerr << "error: check needs --policy or --uniform\n";
                return 1;
            }
            std::string text;
            try {
                text = read_file(policy_path);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
            st = hs_check_policy(model.m, spec.s, text.c_str(), mem, &value, &satisfied, nullptr, 0,
                                 &needed);
            if (st == HS_OK) {
                report.resize(needed);
                st = hs_check_policy(model.m, spec.s, text.c_str(), mem, &value, &satisfied,
                                     report.data(), report.size(), &needed);
            }
        }
        if (st != HS_OK) return die(st, "checking policy");
        report.resize(needed ? needed - 1 : 0);
        std::printf("value = %.9g  satisfied = %s\n", value, satisfied ? "yes" : "no");
        if (!out_report.empty() && !write_file(out_report, report)) {
            std::cerr << "error: cannot write report '" << out_report << "'\n";
            return 1;
        }
        return 0;
    }

    if (expo->parsed()) {
        if (hs_status st = hs_export_decmdp(model.m, spec.s, mem, export_path.c_str()); st != HS_OK)
            return die(st, "exporting Dec-MDP problem");
        std::cout << "wrote " << export_path << "\n";
        return 0;
    }

    // synth / oracle
    hs_synth_options opts;
    hs_synth_options_init(&opts);
    opts.memory_bits = mem;
    opts.time_budget_s = budget;
    opts.epsilon = eps;
    opts.seed = seed;
    opts.workers = workers;
    opts.initial_threshold = threshold;
    if (!trace_path.empty()) opts.trace_path = trace_path.c_str();
    if (!csv_path.empty()) opts.csv_path = csv_path.c_str();
    if (!hoa_path.empty()) opts.hoa_path = hoa_path.c_str();
    opts.state_budget = state_budget;

    ResultHandle result;
    hs_status st = synth->parsed() ? hs_synthesize(model.m, spec.s, &opts, &result.r)
                                   : hs_oracle(model.m, spec.s, &opts, &result.r);
    if (st != HS_OK) return die(st, synth->parsed() ? "synthesis" : "oracle enumeration");

    const char* outcome = "";
    switch (hs_result_outcome(result.r)) {
        case HS_SYNTH_OPTIMUM: outcome = "optimum found"; break;
        case HS_SYNTH_THRESHOLD: outcome = "threshold satisfied"; break;
        case HS_SYNTH_INFEASIBLE: outcome = "infeasible"; break;
        case HS_SYNTH_BUDGET: outcome = "budget exhausted"; break;
    }
    std::printf("%s\n", outcome);
    if (hs_result_has_policy(result.r))
        std::printf("value        = %.9g\n", hs_result_value(result.r));
    std::printf("upper bound  = %.9g\n", hs_result_upper_bound(result.r));
    std::printf("|D|          = %llu\n",
                static_cast<unsigned long long>(hs_result_product_states(result.r)));
    std::printf("nodes        = %llu  splits = %llu\n",
                static_cast<unsigned long long>(hs_result_nodes(result.r)),
                static_cast<unsigned long long>(hs_result_splits(result.r)));
    std::printf("time         = %.2fs  (best at %.2fs)\n", hs_result_total_time_s(result.r),
                hs_result_time_to_best_s(result.r));

    if (hs_result_has_policy(result.r)) {
        std::string policy = fetch_text(hs_result_policy_text, result.r);
        if (!policy_out.empty()) {
            if (!write_file(policy_out, policy)) {
                std::cerr << "error: cannot write policy '" << policy_out << "'\n";
                return 1;
            }
        } else {
            std::printf("%s", policy.c_str());
        }
    }
    if (!out_report.empty()) {
        std::string report = fetch_text(hs_result_report_json, result.r);
        if (!write_file(out_report, report)) {
            std::cerr << "error: cannot write report '" << out_report << "'\n";
            return 1;
        }
    }

    switch (hs_result_outcome(result.r)) {
        case HS_SYNTH_OPTIMUM:
        case HS_SYNTH_THRESHOLD: return 0;
        case HS_SYNTH_INFEASIBLE: return 2;
        case HS_SYNTH_BUDGET: return hs_result_has_policy(result.r) ? 3 : 4;
    }
    return 0;
}
