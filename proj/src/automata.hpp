#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ltl.hpp"

namespace hypersynth {

class AutomatonError : public std::runtime_error {
public:
    explicit AutomatonError(const std::string& what) : std::runtime_error(what) {}
};

/// Atomic proposition tagged with an agent index; the automaton alphabet is
/// built from valuations of these.
struct TaggedAtom {
    uint32_t ap;     // index into ap_names
    uint32_t agent;  // 0-based replica index
    auto operator<=>(const TaggedAtom&) const = default;
};

/// Conjunction of tagged-atom literals over atom indices (bit i = atom i).
struct Cube {
    uint64_t pos = 0;
    uint64_t neg = 0;
    bool satisfiable() const { return (pos & neg) == 0; }
    bool matches(uint64_t valuation) const {
        return (valuation & pos) == pos && (valuation & neg) == 0;
    }
    auto operator<=>(const Cube&) const = default;
};

/// Construction caps; failures are explicit rather than silent.
struct AutomataLimits {
    uint32_t max_nba_states = 4096;
    uint32_t max_dra_states = 100000;
    uint32_t max_atoms = 20;  // letter-valuation tables are 2^atoms entries
};

/// Nondeterministic Buechi automaton with symbolic (cube-labeled) transitions.
struct Nba {
    std::vector<std::string> ap_names;
    std::vector<TaggedAtom> atoms;
    int arity = 1;

    struct Move {
        Cube cube;
        uint32_t target;
    };

    uint32_t num_states = 0;
    uint32_t initial = 0;
    std::vector<std::vector<Move>> moves;
    std::vector<char> accepting;
};

struct RabinPair {
    std::vector<char> L;  // finitely often
    std::vector<char> K;  // infinitely often
};

/// Deterministic Rabin automaton. The concrete alphabet (tuples of AP sets)
/// is folded into letter classes: a letter maps to the valuation of the
/// tagged atoms, and `valuation_class` collapses valuations with identical
/// behavior. `trans[q][c]` is total and deterministic by construction.
struct Dra {
    std::vector<std::string> ap_names;
    std::vector<TaggedAtom> atoms;
    int arity = 1;

    uint32_t num_states = 0;
    uint32_t initial = 0;
    uint32_t num_classes = 0;
    std::vector<uint32_t> valuation_class;     // size 1 << atoms.size()
    std::vector<uint64_t> class_representative;
    std::vector<std::vector<uint32_t>> trans;  // [state][class] -> state
    std::vector<RabinPair> pairs;

    uint32_t class_of_valuation(uint64_t v) const { return valuation_class[v]; }
    uint32_t step(uint32_t q, uint64_t valuation) const {
        return trans[q][valuation_class[valuation]];
    }

    /// Valuation of the atoms under one letter: per-agent AP bitmasks over
    /// this automaton's ap_names order.
    uint64_t valuation_of(const std::vector<uint64_t>& agent_labels) const;
};

/// Translate an NNF formula into an NBA accepting exactly its models.
Nba ltl_to_nba(const LtlPtr& nnf_formula, const AutomataLimits& limits = {});

/// Safra determinization; L(result) = L(input).
Dra determinize_to_dra(const Nba& n, const AutomataLimits& limits = {});

/// Full pipeline with direct constructions for the common reachability,
/// safety, and propositional-until shapes.
Dra ltl_to_dra(const LtlPtr& f, const AutomataLimits& limits = {});

/// Single accepting sink; accepts every word of the given arity.
Dra universal_dra(int arity);

/// Run the unique DRA run on the lasso and check the Rabin condition on the
/// states visited infinitely often.
bool dra_accepts_lasso(const Dra& d, const LassoWord& w);

/// Merge behaviorally identical states (same acceptance memberships and
/// successor rows, iterated) and drop unreachable ones.
Dra merge_duplicate_states(const Dra& d);

// --- HOA v1 interchange (acc-name: Rabin, explicit labels) -----------------

Dra parse_hoa(std::istream& in);
Dra parse_hoa_text(const std::string& text);
Dra load_hoa(const std::string& path);
void emit_hoa(const Dra& d, std::ostream& out);
std::string emit_hoa_text(const Dra& d);

}  // namespace hypersynth
