#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hyperspec.hpp"
#include "mdp.hpp"
#include "product.hpp"

namespace hypersynth {

class DecExportError : public std::runtime_error {
public:
    explicit DecExportError(const std::string& what) : std::runtime_error(what) {}
};

/// Write the synchronized product as a `.dpomdp` problem with m+1 agents
/// (m replicas plus one automaton agent with a single dummy action): each
/// agent fully observes its own component, reward 1 is granted on entering
/// the Rabin success set, which is made absorbing. Total reward then equals
/// the probability of reaching the success set. Requires the decentralized
/// fragment.
void export_dpomdp(const ProductMdp& p, const HyperFormula& spec, const std::string& path);
void emit_dpomdp(const ProductMdp& p, const HyperFormula& spec, std::ostream& out);

/// Parsed `.dpomdp` problem; reader for round-trip checks.
struct DecProblem {
    uint32_t num_agents = 0;
    double discount = 1.0;
    std::vector<std::string> state_names;
    std::vector<std::vector<std::string>> agent_actions;
    std::vector<std::vector<std::string>> agent_observations;
    std::vector<double> start;

    /// Joint view: actions are joint tuples (every combination), transitions
    /// and expected rewards from the T/R lines.
    Mdp joint;
    std::vector<std::vector<uint32_t>> joint_action_components;
    /// Deterministic per-agent observation of each state, from the O lines.
    std::vector<std::vector<uint32_t>> obs_of_state;

    uint32_t initial_state() const;
};

DecProblem parse_dpomdp(std::istream& in);
DecProblem load_dpomdp(const std::string& path);

}  // namespace hypersynth
