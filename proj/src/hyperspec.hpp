#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ltl.hpp"
#include "mdp.hpp"

namespace hypersynth {

class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

enum class Cmp : uint8_t { Lt, Le, Gt, Ge };

std::string cmp_text(Cmp c);
bool cmp_holds(double value, Cmp c, double bound);
Cmp cmp_negate(Cmp c);

/// One probability (or reward) constraint of the specification body.
struct ProbConstraint {
    enum class Kind : uint8_t { Threshold, Optimize, RewardOptimize };
    Kind kind = Kind::Threshold;
    Cmp cmp = Cmp::Ge;          // Threshold
    double bound = 0.0;         // Threshold
    bool maximize = true;       // Optimize / RewardOptimize
    std::string reward_name;    // RewardOptimize
    std::string reward_agent;   // RewardOptimize: state variable whose costs count; empty = all
    LtlPtr body;                // LTL body; for RewardOptimize the goal event (propositional)
};

/// Positive and/or tree over constraint references (negation has been folded
/// into the comparison operators).
struct BodyNode {
    enum class Kind : uint8_t { Leaf, And, Or };
    Kind kind = Kind::Leaf;
    uint32_t constraint = 0;          // Leaf
    std::vector<uint32_t> children;   // And/Or: indices into HyperFormula::body_nodes
};

/// Elements of an initial-state set: state index or label name.
struct StateRef {
    bool by_index = false;
    uint32_t index = 0;
    std::string label;
};

struct AgentQuantifier {
    bool universal = true;
    std::string state_var;
    std::vector<StateRef> initial_set;
    std::string policy_var;
};

/// Parsed PHyperLTL specification: policy prefix, agent quantifier block,
/// Boolean combination of probability constraints.
struct HyperFormula {
    std::vector<std::string> policy_vars;
    std::vector<AgentQuantifier> agents;
    std::vector<ProbConstraint> constraints;
    std::vector<BodyNode> body_nodes;
    uint32_t body_root = 0;

    uint32_t agent_count() const { return static_cast<uint32_t>(agents.size()); }
    int policy_var_index(const std::string& name) const;
};

/// Agent/policy wiring of one expansion instance.
struct Bindings {
    uint32_t agent_count = 0;
    std::vector<uint32_t> policy_var_of_agent;          // size m
    std::vector<StateId> initial_state_of_agent;        // size m, concrete
    std::vector<std::vector<uint32_t>> agents_of_policy_var;
    uint32_t num_policy_vars = 0;
};

/// Quantifier expansion: conjunction (forall) / disjunction (exists) over the
/// initial-state choices; every leaf carries a concrete initial tuple.
struct Expansion {
    struct Node {
        enum class Kind : uint8_t { Leaf, And, Or };
        Kind kind = Kind::Leaf;
        uint32_t leaf = 0;                // Leaf: index into `leaves`
        std::vector<uint32_t> children;   // And/Or
    };
    std::vector<Bindings> leaves;
    std::vector<Node> nodes;
    uint32_t root = 0;
};

// --- operations ---------------------------------------------------------------

/// Parse the concrete syntax. Declarations are separated by ';' or newlines:
///
///   exists (sigma1 sigma2);
///   forall x1 in {0} (sigma1);
///   forall x2 in {q5} (sigma2);
///   Pmax [ F (T@x1 & T@x2) ];
///
/// Constraint forms: `P >= 0.5 [...]`, `Pmax [...]`, `Pmin [...]`,
/// `Rmin{cost@x1} [...]`, `Rmax [...]`; body lines combine constraints with
/// `&`, `|`, `!` and parentheses. Initial sets list state indices or label
/// names. `#` starts a comment.
HyperFormula parse_spec(const std::string& text);
HyperFormula load_spec(const std::string& path);

/// Well-formedness against a model: unbound variables, empty or out-of-range
/// initial sets, duplicate/conflicting objectives. Empty report = well-formed.
std::vector<std::string> check_well_formed(const HyperFormula& h, const Mdp& m);

/// Resolve the body's state-variable tags to agent indices.
HyperFormula resolve_spec(const HyperFormula& h);

/// Enumerate initial-state choices per the quantifier semantics. Requires a
/// well-formed formula; optimization objectives demand a single leaf.
Expansion expand_quantifiers(const HyperFormula& h, const Mdp& m);

/// Decentralized fragment: policy variables in bijection with agents, exactly
/// one probability operator, all initial sets singletons.
bool is_dec_fragment(const HyperFormula& h);

bool has_optimization(const HyperFormula& h);

/// Resolve one StateRef against the model (by index, or every state carrying
/// the label). Throws SpecError for unknown labels / out-of-range indices.
std::vector<StateId> resolve_state_ref(const StateRef& ref, const Mdp& m);

std::string print_spec(const HyperFormula& h);

}  // namespace hypersynth
