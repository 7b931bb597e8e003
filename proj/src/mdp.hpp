#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypersynth {

using StateId = uint32_t;
using ActionId = uint32_t;

constexpr StateId kNoState = UINT32_MAX;
constexpr ActionId kNoAction = UINT32_MAX;

/// Row-sum tolerance for double-precision distributions.
constexpr double kRowSumTolerance = 1e-12;

/// Models carry at most 64 atomic propositions; labels are bitmasks.
constexpr uint32_t kMaxAtomicPropositions = 64;

class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct TransitionEntry {
    StateId target;
    double prob;
    bool operator==(const TransitionEntry&) const = default;
};

/// Discrete distribution over states: sparse, sorted by target, targets distinct,
/// probabilities in (0,1] summing to 1 within kRowSumTolerance.
struct Distribution {
    std::vector<TransitionEntry> support;

    double sum() const;
    /// Sort by target and merge duplicate targets.
    void normalize_layout();
    bool operator==(const Distribution&) const = default;
};

/// State-action rewards, aligned with the owning Mdp's enabled-action rows.
struct RewardStructure {
    std::string name = "default";
    std::vector<std::vector<double>> values;  // values[s][k] for enabled[s][k]
};

/// Finite labeled MDP with a global action alphabet and per-state enabled subsets.
/// A Markov chain is the special case with exactly one enabled action per state.
/// Instances are treated as immutable once constructed and are safe to share
/// across threads.
struct Mdp {
    std::vector<std::string> action_names;
    std::vector<std::string> ap_names;
    uint32_t num_states = 0;
    std::vector<std::vector<ActionId>> enabled;      // sorted, non-empty per state
    std::vector<std::vector<Distribution>> rows;     // rows[s][k] for enabled[s][k]
    std::vector<uint64_t> labels;                    // AP bitmask per state
    std::optional<RewardStructure> rewards;

    uint32_t num_actions() const { return static_cast<uint32_t>(action_names.size()); }
    uint32_t num_aps() const { return static_cast<uint32_t>(ap_names.size()); }
    bool is_markov_chain() const;

    /// Index of action a within enabled[s], or -1 when disabled.
    int enabled_index(StateId s, ActionId a) const;

    ActionId action_id(const std::string& name) const;  // kNoAction if unknown
    uint32_t ap_id(const std::string& name) const;      // kMaxAtomicPropositions if unknown
};

/// Deterministic memoryless policy: one action per state in its domain.
struct MemorylessPolicy {
    std::vector<ActionId> choice;  // kNoAction where undefined

    bool defined(StateId s) const {
        return s < choice.size() && choice[s] != kNoAction;
    }
};

/// Reports every violated model invariant; empty means valid.
std::vector<std::string> validate_mdp(const Mdp& m);

/// Fix a policy in an MDP: the result has exactly one enabled action per state.
/// Throws ModelError if the policy is undefined on some state or picks a
/// disabled action.
Mdp induce_mc(const Mdp& m, const MemorylessPolicy& p);

/// Collapse every state's enabled actions into a single uniformly averaged row.
/// Evaluates the uniform-random baseline policy exactly.
Mdp uniform_chain(const Mdp& m);

// --- plain-text model format ---------------------------------------------
//
//   # comment
//   states N
//   actions <name>...
//   ap <name>...
//   <s> <action> <s'> <p>        one line per transition
//   label <s> <ap>...
//   reward <s> <action> <r>      optional
//
// States are 0-based indices; actions may be given by name or index.
// Probabilities accept decimal or rational "p/q" notation.

Mdp parse_model(std::istream& in);
Mdp parse_model_text(const std::string& text);
Mdp load_model(const std::string& path);
void emit_model(const Mdp& m, std::ostream& out);
std::string emit_model_text(const Mdp& m);

}  // namespace hypersynth
