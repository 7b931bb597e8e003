#pragma once

// Shared generators and independent reference oracles for the test suites.

#include <random>
#include <string>
#include <vector>

#include "automata.hpp"
#include "hyperspec.hpp"
#include "ltl.hpp"
#include "mdp.hpp"
#include "probcheck.hpp"
#include "product.hpp"

namespace hypersynth::test {

using Rng = std::mt19937_64;

/// Random MDP with dyadic probabilities, every state labeled from `aps`.
Mdp random_mdp(Rng& rng, uint32_t max_states, uint32_t max_actions,
               const std::vector<std::string>& aps, double label_density = 0.35);

/// Random Markov chain (single enabled action per state).
Mdp random_mc(Rng& rng, uint32_t max_states, const std::vector<std::string>& aps,
              double label_density = 0.35);

/// Random lasso word over the given AP names.
LassoWord random_lasso(Rng& rng, const std::vector<std::string>& aps, int arity,
                       size_t max_prefix = 4, size_t max_loop = 4);

/// Random LTL formula of bounded depth over aps x agents.
LtlPtr random_ltl(Rng& rng, const std::vector<std::string>& aps, int arity, int depth);

/// Independent reference for LTL-on-lasso truth: direct quantifier semantics
/// with a scan cutoff of one full period (positions repeat afterwards).
/// A different algorithm from the fixpoint evaluator in the library.
bool lasso_reference_eval(const LtlPtr& f, const LassoWord& w);

/// All maximal end components by brute force: every state subset that is
/// strongly connected under its maximal internal action set, filtered to
/// inclusion-maximal ones.
std::vector<std::vector<uint32_t>> brute_force_mecs(const Mdp& m);

/// Maximal reachability by enumerating every memoryless policy and solving
/// each induced chain exactly.
std::vector<double> brute_force_reachability(const Mdp& m, const std::vector<StateId>& targets,
                                             bool maximize);

/// Success-set membership by enumerating every memoryless product policy and
/// testing the recurrent classes of each induced chain against the pairs.
std::vector<char> brute_force_success_set(const ProductMdp& p);

/// Exhaustive consistency scan mirroring the definition: first conflict per
/// hole over the policy-reachable product states.
bool brute_force_consistent(const ProductMdp& p, const std::vector<uint32_t>& rows);

/// Deterministic tiny spec text builder for two-agent formulas.
std::string two_agent_spec(const std::string& body, StateId init1, StateId init2,
                           bool shared_policy);

}  // namespace hypersynth::test
