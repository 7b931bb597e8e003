#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "automata.hpp"
#include "hyperspec.hpp"
#include "mdp.hpp"

namespace hypersynth {

class ProductError : public std::runtime_error {
public:
    explicit ProductError(const std::string& what) : std::runtime_error(what) {}
};

/// Resource caps for product construction; HYPERSYNTH_STATE_BUDGET overrides
/// the state cap.
struct ProductLimits {
    uint64_t max_states = 5'000'000;
    uint64_t max_entries = 100'000'000;

    static ProductLimits from_env();
};

/// Per-hole action mask; hole = (policy variable, local state of the agent
/// model). Requires a global action alphabet of at most 64 actions.
struct ActionRestriction {
    uint32_t num_vars = 0;
    uint32_t num_locals = 0;
    std::vector<uint64_t> allowed;  // [var * num_locals + local]

    static ActionRestriction full(const Mdp& agent, uint32_t num_vars);

    uint64_t& mask(uint32_t var, uint32_t local) { return allowed[var * num_locals + local]; }
    uint64_t mask(uint32_t var, uint32_t local) const { return allowed[var * num_locals + local]; }
    bool permits(uint32_t var, uint32_t local, ActionId a) const {
        return (allowed[var * num_locals + local] >> a) & 1;
    }
    /// Pointwise intersection; empty-intersection holes are reported by
    /// apply_restriction rather than here.
    ActionRestriction intersect(const ActionRestriction& other) const;
    bool operator==(const ActionRestriction&) const = default;
};

/// Synchronized product of the m-replica self-composition with a DRA.
/// States are (s_1,...,s_m, q); joint actions are m-tuples of agent actions
/// (the automaton step is deterministic and implicit). Only the fragment
/// reachable from the initial tuples is materialized. Immutable after
/// construction; restrictions are overlay masks.
struct ProductMdp {
    Mdp agent;  // possibly memory-unfolded
    Dra dra;
    Bindings bindings;
    uint32_t m = 1;

    uint32_t num_states = 0;
    std::vector<StateId> state_locals;  // m entries per state
    std::vector<uint32_t> state_q;
    std::vector<uint32_t> initials;  // one per expansion leaf (may repeat)

    // CSR rows: per state the joint actions in lexicographic enabled order
    std::vector<uint32_t> state_row_begin;  // num_states + 1
    std::vector<ActionId> row_actions;      // m entries per row
    std::vector<uint32_t> row_entry_begin;  // num_rows + 1
    std::vector<TransitionEntry> entries;

    StateId local(uint32_t s, uint32_t i) const { return state_locals[size_t{s} * m + i]; }
    uint32_t num_rows(uint32_t s) const { return state_row_begin[s + 1] - state_row_begin[s]; }
    uint32_t row_index(uint32_t s, uint32_t k) const { return state_row_begin[s] + k; }
    const ActionId* actions_of_row(uint32_t row) const { return &row_actions[size_t{row} * m]; }

    /// Row (within state s) selecting the given per-agent actions; -1 if some
    /// action is disabled.
    int find_row(uint32_t s, const std::vector<ActionId>& actions) const;

    /// Label tuple of a product state (per-agent AP masks of the agent model).
    std::vector<uint64_t> label_tuple(uint32_t s) const;

    /// True when every agent's component obeys its bound hole mask.
    bool row_allowed(const ActionRestriction& r, uint32_t s, uint32_t k) const {
        const ActionId* acts = actions_of_row(row_index(s, k));
        for (uint32_t i = 0; i < m; ++i)
            if (!r.permits(bindings.policy_var_of_agent[i], local(s, i), acts[i])) return false;
        return true;
    }
};

/// Product plus overlay mask; the unit all downstream analyses operate on.
struct RestrictedProduct {
    const ProductMdp* product = nullptr;
    const ActionRestriction* restriction = nullptr;  // null = unrestricted

    bool row_enabled(uint32_t s, uint32_t k) const {
        return restriction == nullptr || product->row_allowed(*restriction, s, k);
    }
};

/// Overlay a restriction onto a product. Throws ProductError when a hole's
/// allowed set does not intersect the enabled actions of its local state
/// (an infeasible submodel; callers prune it).
RestrictedProduct apply_restriction(const ProductMdp& p, const ActionRestriction& r);

/// m independent replicas as a plain MDP over tuple states; labels move to
/// the per-replica namespace `ap@k`. Exposed mainly for testing.
Mdp self_compose(const Mdp& m, uint32_t count, const ProductLimits& limits = ProductLimits::from_env());

/// Synchronized product; one initial product state per bindings tuple
/// (deduplicated by construction of the state index).
ProductMdp sync_product(const Mdp& m, Dra dra, const std::vector<Bindings>& leaves,
                        const ProductLimits& limits = ProductLimits::from_env());

/// Unfold 2^bits memory values: states (s,n), actions (a,n') with
/// deterministic memory updates chosen by the policy. bits = 0 copies the
/// model.
Mdp unfold_memory(const Mdp& m, uint32_t bits);

/// Name helpers for the unfolded model.
std::string unfolded_action_name(const std::string& base, uint32_t next_mem);
uint32_t unfolded_state(StateId original, uint32_t mem, uint32_t bits);

}  // namespace hypersynth
