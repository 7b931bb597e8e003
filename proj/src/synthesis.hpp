#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "automata.hpp"
#include "hyperspec.hpp"
#include "mdp.hpp"
#include "probcheck.hpp"
#include "product.hpp"

namespace hypersynth {

class SynthesisError : public std::runtime_error {
public:
    explicit SynthesisError(const std::string& what) : std::runtime_error(what) {}
};

/// Centralized product policy: chosen row per product state (kNoRow where the
/// state was never visited by the computing analysis).
using ProductPolicy = std::vector<uint32_t>;

enum class ConflictKind : uint8_t { LocalObservability, PolicyBinding };

/// One inconsistency of a centralized policy: two actions assigned to the
/// same (policy variable, local state) decision point.
struct Conflict {
    uint32_t var = 0;
    StateId local = 0;
    ActionId action_a = 0;
    ActionId action_b = 0;
    uint32_t state_a = 0;  // witness product states
    uint32_t state_b = 0;
    uint32_t agent_i = 0;
    uint32_t agent_j = 0;
    ConflictKind kind = ConflictKind::LocalObservability;
};

/// First conflict per hole, in discovery order of a fixed ascending scan over
/// the policy-reachable product states.
struct ConsistencyReport {
    std::vector<Conflict> conflicts;
    bool consistent() const { return conflicts.empty(); }
};

/// One memoryless policy per policy variable, over the (possibly unfolded)
/// agent model.
struct PolicyTuple {
    std::vector<std::vector<ActionId>> choice;  // [var][local]
};

ConsistencyReport check_consistency(const ProductMdp& p, const ProductPolicy& rows);

/// Factorize a consistent centralized policy; unreachable holes fall back to
/// the lowest enabled action. Throws SynthesisError on an inconsistent input.
PolicyTuple factorize(const ProductMdp& p, const ProductPolicy& rows);

/// Map a policy tuple to the centralized product policy it induces
/// (consistent by construction).
ProductPolicy lift(const PolicyTuple& t, const ProductMdp& p);

/// Optimistic repair: per hole pick uniformly (seeded) among the actions the
/// centralized policy assigns to that hole across reachable product states.
PolicyTuple resolve_randomly(const ProductMdp& p, const ProductPolicy& rows,
                             const ConsistencyReport& report, uint64_t seed);

/// Refine on the report's first conflict: three children restricting the hole
/// to {a}, {b}, and allowed \ {a,b}; the third is dropped when empty.
std::vector<ActionRestriction> split(const ActionRestriction& r, const ConsistencyReport& report);

enum class ConstraintClass : uint8_t { Sat, Unsat, Ambiguous };

/// Threshold classification from the extremal achievable values at the
/// instance's initial product state.
ConstraintClass classify_constraint(const RestrictedProduct& rp, const ProbConstraint& c,
                                    uint32_t initial_state, double eps = kDefaultEpsilon,
                                    RabinResult* max_out = nullptr, RabinResult* min_out = nullptr);

// --- shared evaluation context ---------------------------------------------------

/// One probability-constraint instance: a constraint evaluated from one
/// expansion leaf's initial tuple.
struct Instance {
    uint32_t constraint = 0;
    uint32_t leaf = 0;
};

/// Combined quantifier/body evaluation tree over instances.
struct EvalTree {
    struct Node {
        enum class Kind : uint8_t { Instance, And, Or } kind = Kind::Instance;
        uint32_t instance = 0;
        std::vector<uint32_t> children;
    };
    std::vector<Node> nodes;
    uint32_t root = 0;
};

/// Everything needed to exactly evaluate policy tuples for one (model, spec,
/// memory) configuration. Products are built separately by the synthesizer.
struct EvalContext {
    Mdp original;
    Mdp work;  // memory-unfolded agent model
    uint32_t memory_bits = 0;
    HyperFormula spec;  // resolved tags
    Expansion expansion;  // leaves carry initial states of `work`
    std::vector<Dra> dras;  // per constraint
    std::vector<Instance> instances;
    EvalTree tree;
    std::vector<int> reward_agent_index;  // per constraint; -1 = all agents

    uint32_t num_policy_vars() const { return static_cast<uint32_t>(spec.policy_vars.size()); }
};

EvalContext make_eval_context(const Mdp& model, const HyperFormula& spec, uint32_t memory_bits,
                              const Dra* override_dra = nullptr,
                              const AutomataLimits& limits = {});

struct Evaluation {
    std::vector<double> instance_values;
    bool satisfied = false;   // threshold specs: tree verdict
    double objective = 0.0;   // optimize specs: objective value
};

/// Exact verification path: induce the self-composition chain of the tuple
/// and solve each instance on the chain paired with its automaton.
Evaluation evaluate_policy_tuple(const EvalContext& ctx, const PolicyTuple& t);

/// Value of the uniformly randomizing baseline policy.
Evaluation evaluate_uniform_random(const EvalContext& ctx);

/// Lowest-action tuple within a restriction.
PolicyTuple lowest_tuple(const EvalContext& ctx, const ActionRestriction& r);

// --- synthesis -------------------------------------------------------------------

enum class SynthesisStatus : uint8_t {
    OptimumFound,
    ThresholdSatisfied,
    Infeasible,
    BudgetExhausted,
};

struct SplitEvent {
    ActionRestriction parent;
    Conflict conflict;
    std::vector<ActionRestriction> children;
};

struct SynthesisOptions {
    uint32_t memory_bits = 0;
    double time_budget_s = 3600.0;
    double epsilon = kDefaultEpsilon;
    uint64_t seed = 0;
    uint32_t workers = 1;
    /// Reference incumbent for optimization (e.g. a mem=0 value handed to a
    /// mem=1 run); NaN = none.
    double initial_threshold = std::numeric_limits<double>::quiet_NaN();
    const Dra* override_dra = nullptr;
    AutomataLimits automata_limits;
    ProductLimits product_limits = ProductLimits::from_env();
    std::string trace_path;
    std::string csv_path;
    std::function<void(const SplitEvent&)> split_observer;
    /// Upper bound on tuples the oracle enumerates.
    uint64_t oracle_cap = 10'000'000;
};

struct SynthesisStats {
    uint64_t nodes = 0;
    uint64_t splits = 0;
    uint64_t pruned = 0;
    double time_to_best_s = 0.0;
    double total_time_s = 0.0;
    uint64_t product_states = 0;
};

struct SynthesisResult {
    SynthesisStatus status = SynthesisStatus::Infeasible;
    bool has_tuple = false;
    PolicyTuple best;
    double best_value = 0.0;
    bool maximize = true;
    double upper_bound = 0.0;  // unrestricted abstraction value at the root
    std::vector<double> instance_values;
    SynthesisStats stats;
};

/// Abstraction refinement per the synchronized-product scheme: solve the
/// abstraction, factorize consistent optima, otherwise resolve optimistically
/// and split on the first conflict; anytime incumbent tracking.
SynthesisResult synthesize(const Mdp& model, const HyperFormula& spec, const SynthesisOptions& opts);

/// Brute-force enumeration of all policy tuples over reachable holes,
/// exactly evaluating each; the reference for desk-scale instances.
SynthesisResult oracle_enumerate(const Mdp& model, const HyperFormula& spec,
                                 const SynthesisOptions& opts);

// --- policy tuple files -------------------------------------------------------------
//
//   policy <var> mem=<bits>
//   <state> <action> [<next-memory>]
//
// States and actions use the original model's numbering/names; the memory
// column appears when bits > 0.

std::string format_policy_tuple(const EvalContext& ctx, const PolicyTuple& t);
PolicyTuple parse_policy_tuple(const EvalContext& ctx, const std::string& text);

}  // namespace hypersynth
