#include "probcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace hypersynth {

std::pair<std::vector<double>, MemorylessPolicy> optimal_reachability(
    const Mdp& m, const std::vector<StateId>& targets, bool maximize, double eps) {
    MdpView v(m);
    Bits t(m.num_states);
    for (StateId s : targets) t.set(s);
    ReachResult r = optimal_reachability(v, t, maximize, eps);
    MemorylessPolicy p;
    p.choice.assign(m.num_states, kNoAction);
    for (StateId s = 0; s < m.num_states; ++s)
        if (r.row_choice[s] != kNoRow) p.choice[s] = m.enabled[s][r.row_choice[s]];
    return {std::move(r.values), std::move(p)};
}

std::pair<std::vector<double>, MemorylessPolicy> expected_total_reward(
    const Mdp& m, const RewardStructure& r, const std::vector<StateId>& goal, bool maximize,
    double eps) {
    MdpView v(m);
    Bits g(m.num_states);
    for (StateId s : goal) g.set(s);
    std::vector<uint32_t> rows;
    auto values = expected_total_reward_view(
        v, [&](uint32_t s, uint32_t k) { return r.values[s][k]; }, g, !goal.empty(), maximize, eps,
        &rows);
    MemorylessPolicy p;
    p.choice.assign(m.num_states, kNoAction);
    for (StateId s = 0; s < m.num_states; ++s)
        if (rows[s] != kNoRow) p.choice[s] = m.enabled[s][rows[s]];
    return {std::move(values), std::move(p)};
}

// --- Rabin analysis on products ---------------------------------------------------

SuccessSet accepting_success_set(const RestrictedProduct& rp) {
    const ProductMdp& p = *rp.product;
    ProductView view(rp);
    SuccessSet out;
    out.states = Bits(p.num_states);
    out.strategy_row.assign(p.num_states, kNoRow);

    for (const RabinPair& pair : p.dra.pairs) {
        Bits mask(p.num_states);
        bool k_nonempty = false;
        for (uint32_t s = 0; s < p.num_states; ++s) {
            if (!pair.L[p.state_q[s]]) mask.set(s);
            k_nonempty = k_nonempty || pair.K[p.state_q[s]];
        }
        if (!k_nonempty) continue;
        for (const Mec& mec : mec_decomposition(view, &mask)) {
            bool hits_k = false;
            for (uint32_t s : mec.states) hits_k = hits_k || pair.K[p.state_q[s]];
            if (!hits_k) continue;

            // in-MEC strategy: attractor to the K-states, K-states take their
            // lowest retained row (the attractor of the others brings the run
            // back to K almost surely)
            Bits in_mec(p.num_states);
            for (uint32_t s : mec.states) in_mec.set(s);
            std::vector<char> reached(mec.states.size(), 0);
            std::vector<uint32_t> choice(mec.states.size(), kNoRow);
            auto member_index = [&](uint32_t s) {
                auto it = std::lower_bound(mec.states.begin(), mec.states.end(), s);
                return it != mec.states.end() && *it == s
                           ? static_cast<int>(it - mec.states.begin())
                           : -1;
            };
            for (size_t i = 0; i < mec.states.size(); ++i)
                if (pair.K[p.state_q[mec.states[i]]]) {
                    reached[i] = 1;
                    choice[i] = mec.rows[i].front();
                }
            bool grew = true;
            while (grew) {
                grew = false;
                for (size_t i = 0; i < mec.states.size(); ++i) {
                    if (reached[i]) continue;
                    for (uint32_t k : mec.rows[i]) {
                        bool progresses = false;
                        for (const auto& e : view.row(mec.states[i], k)) {
                            int j = member_index(e.target);
                            if (j >= 0 && reached[j]) progresses = true;
                        }
                        if (progresses) {
                            reached[i] = 1;
                            choice[i] = k;
                            grew = true;
                            break;
                        }
                    }
                }
            }
            for (size_t i = 0; i < mec.states.size(); ++i) {
                uint32_t s = mec.states[i];
                if (!out.states.test(s)) {  // first pair wins
                    out.states.set(s);
                    out.strategy_row[s] = choice[i];
                }
            }
        }
    }
    return out;
}

Bits rejecting_success_set(const RestrictedProduct& rp) {
    const ProductMdp& p = *rp.product;
    ProductView view(rp);
    Bits out(p.num_states);

    std::vector<Bits> stack;  // state masks of sub-MDPs to decompose
    {
        Bits all(p.num_states);
        for (uint32_t s = 0; s < p.num_states; ++s) all.set(s);
        stack.push_back(std::move(all));
    }
    while (!stack.empty()) {
        Bits mask = std::move(stack.back());
        stack.pop_back();
        for (const Mec& mec : mec_decomposition(view, &mask)) {
            Bits c(p.num_states);
            for (uint32_t s : mec.states) c.set(s);
            // pairs this end component currently satisfies (bad for rejection)
            Bits k_union(p.num_states);
            bool any_bad = false;
            for (const RabinPair& pair : p.dra.pairs) {
                bool hits_l = false, hits_k = false;
                for (uint32_t s : mec.states) {
                    hits_l = hits_l || pair.L[p.state_q[s]];
                    hits_k = hits_k || pair.K[p.state_q[s]];
                }
                if (!hits_l && hits_k) {
                    any_bad = true;
                    for (uint32_t s : mec.states)
                        if (pair.K[p.state_q[s]]) k_union.set(s);
                }
            }
            if (!any_bad) {
                out |= c;
            } else {
                c.and_not(k_union);
                if (c.any()) stack.push_back(std::move(c));
            }
        }
    }
    return out;
}

RabinResult rabin_optimal_policy(const RestrictedProduct& rp, bool maximize, double eps) {
    const ProductMdp& p = *rp.product;
    ProductView view(rp);
    RabinResult res;
    if (maximize) {
        res.success = accepting_success_set(rp);
        ReachResult reach = optimal_reachability(view, res.success.states, true, eps);
        res.values = std::move(reach.values);
        res.row_choice = std::move(reach.row_choice);
        // inside accepting components the recorded recurrence strategy takes over
        res.success.states.for_each([&](size_t s) { res.row_choice[s] = res.success.strategy_row[s]; });
    } else {
        Bits rejecting = rejecting_success_set(rp);
        ReachResult reach = optimal_reachability(view, rejecting, true, eps);
        res.values.assign(p.num_states, 0.0);
        for (uint32_t s = 0; s < p.num_states; ++s) res.values[s] = 1.0 - reach.values[s];
        res.row_choice = std::move(reach.row_choice);
        res.success.states = std::move(rejecting);
        res.success.strategy_row.assign(p.num_states, kNoRow);
    }
    return res;
}

// --- Markov chain analyses -----------------------------------------------------------

namespace {

// exact transient solve: x = b + Q x on the non-absorbing part
std::vector<double> solve_linear_chain(const Mdp& mc, const Bits& absorbing,
                                       const std::vector<double>& absorbing_value,
                                       const std::vector<double>& step_reward) {
    const uint32_t n = mc.num_states;
    std::vector<uint32_t> transient;
    std::vector<int> pos(n, -1);
    for (uint32_t s = 0; s < n; ++s)
        if (!absorbing.test(s)) {
            pos[s] = static_cast<int>(transient.size());
            transient.push_back(s);
        }
    const size_t t = transient.size();

    if (t <= 600) {
        // dense Gaussian elimination on (I - Q)
        std::vector<double> a(t * (t + 1), 0.0);
        for (size_t i = 0; i < t; ++i) {
            uint32_t s = transient[i];
            a[i * (t + 1) + i] = 1.0;
            double rhs = step_reward.empty() ? 0.0 : step_reward[s];
            for (const auto& e : mc.rows[s][0].support) {
                if (absorbing.test(e.target))
                    rhs += e.prob * absorbing_value[e.target];
                else
                    a[i * (t + 1) + pos[e.target]] -= e.prob;
            }
            a[i * (t + 1) + t] = rhs;
        }
        for (size_t col = 0; col < t; ++col) {
            size_t piv = col;
            for (size_t r2 = col + 1; r2 < t; ++r2)
                if (std::abs(a[r2 * (t + 1) + col]) > std::abs(a[piv * (t + 1) + col])) piv = r2;
            if (piv != col)
                for (size_t c2 = 0; c2 <= t; ++c2) std::swap(a[col * (t + 1) + c2], a[piv * (t + 1) + c2]);
            double d = a[col * (t + 1) + col];
            if (std::abs(d) < 1e-300) continue;  // singular block: value stays 0
            for (size_t r2 = 0; r2 < t; ++r2) {
                if (r2 == col) continue;
                double f = a[r2 * (t + 1) + col] / d;
                if (f == 0.0) continue;
                for (size_t c2 = col; c2 <= t; ++c2) a[r2 * (t + 1) + c2] -= f * a[col * (t + 1) + c2];
            }
        }
        std::vector<double> out(n, 0.0);
        for (uint32_t s = 0; s < n; ++s)
            if (absorbing.test(s)) out[s] = absorbing_value[s];
        for (size_t i = 0; i < t; ++i) {
            double d = a[i * (t + 1) + i];
            out[transient[i]] = std::abs(d) < 1e-300 ? 0.0 : a[i * (t + 1) + t] / d;
        }
        return out;
    }

    // Gauss-Seidel fallback for larger chains
    std::vector<double> out(n, 0.0);
    for (uint32_t s = 0; s < n; ++s)
        if (absorbing.test(s)) out[s] = absorbing_value[s];
    for (int it = 0; it < 5'000'000; ++it) {
        double residual = 0.0;
        for (uint32_t s : transient) {
            double q = step_reward.empty() ? 0.0 : step_reward[s];
            for (const auto& e : mc.rows[s][0].support) q += e.prob * out[e.target];
            residual = std::max(residual, std::abs(q - out[s]));
            out[s] = q;
        }
        if (residual < 1e-14) break;
    }
    return out;
}

}  // namespace

std::vector<double> mc_reachability(const Mdp& mc, const Bits& targets) {
    const uint32_t n = mc.num_states;
    // restrict to states that can reach the target at all; the rest solve to 0
    MdpView v(mc);
    Bits zero = prob0_max(v, targets);
    Bits absorbing = zero;
    absorbing |= targets;
    std::vector<double> value(n, 0.0);
    targets.for_each([&](size_t s) { value[s] = 1.0; });
    return solve_linear_chain(mc, absorbing, value, {});
}

std::vector<double> mc_total_reward(const Mdp& mc, const std::vector<double>& state_reward,
                                    const Bits& goal, bool has_goal) {
    const uint32_t n = mc.num_states;
    if (!has_goal) {
        Bits absorbing(n);
        std::vector<double> zero(n, 0.0);
        // absorbing zero-reward self-loop states close the linear system
        for (uint32_t s = 0; s < n; ++s) {
            const auto& sup = mc.rows[s][0].support;
            if (sup.size() == 1 && sup[0].target == s && state_reward[s] == 0.0) absorbing.set(s);
        }
        return solve_linear_chain(mc, absorbing, zero, state_reward);
    }
    std::vector<double> reach = mc_reachability(mc, goal);
    std::vector<double> out(n, 0.0);
    Bits absorbing = goal;
    Bits infinite(n);
    for (uint32_t s = 0; s < n; ++s)
        if (reach[s] < 1.0 - 1e-9) {
            infinite.set(s);
            absorbing.set(s);
        }
    std::vector<double> boundary(n, 0.0);
    std::vector<double> solved = solve_linear_chain(mc, absorbing, boundary, state_reward);
    for (uint32_t s = 0; s < n; ++s) out[s] = infinite.test(s) ? kInfReward : solved[s];
    return out;
}

double mc_satisfaction_probability(const Mdp& mc, const Dra& d, StateId initial,
                                   uint32_t agent_count) {
    if (!mc.is_markov_chain()) throw ModelError("mc_satisfaction_probability expects a Markov chain");
    // atom (ap, agent) -> bit in the chain's flattened `ap@k` label space
    std::vector<int> atom_bit(d.atoms.size(), -1);
    for (size_t i = 0; i < d.atoms.size(); ++i) {
        const TaggedAtom& a = d.atoms[i];
        if (a.agent >= agent_count) throw ModelError("automaton arity exceeds chain arity");
        std::string name = d.ap_names[a.ap] + "@" + std::to_string(a.agent + 1);
        uint32_t id = mc.ap_id(name);
        if (id < kMaxAtomicPropositions) atom_bit[i] = static_cast<int>(id);
    }
    auto valuation = [&](StateId s) {
        uint64_t v = 0;
        for (size_t i = 0; i < d.atoms.size(); ++i)
            if (atom_bit[i] >= 0 && ((mc.labels[s] >> atom_bit[i]) & 1)) v |= uint64_t{1} << i;
        return v;
    };

    // pair the chain with the automaton (automaton reads the entered state)
    std::map<std::pair<StateId, uint32_t>, uint32_t> id_of;
    std::vector<std::pair<StateId, uint32_t>> states;
    auto intern = [&](StateId s, uint32_t q) {
        auto key = std::make_pair(s, q);
        auto it = id_of.find(key);
        if (it != id_of.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(states.size());
        id_of.emplace(key, id);
        states.push_back(key);
        return id;
    };
    uint32_t init = intern(initial, d.step(d.initial, valuation(initial)));

    Mdp chain;
    chain.action_names = {"step"};
    for (uint32_t done = 0; done < states.size(); ++done) {
        auto [s, q] = states[done];
        chain.enabled.push_back({0});
        Distribution dist;
        for (const auto& e : mc.rows[s][0].support)
            dist.support.push_back({intern(e.target, d.step(q, valuation(e.target))), e.prob});
        dist.normalize_layout();
        chain.rows.push_back({std::move(dist)});
    }
    chain.num_states = static_cast<uint32_t>(states.size());
    chain.labels.assign(chain.num_states, 0);

    // accepting bottom SCCs
    int num_sccs = 0;
    std::vector<char> alive(chain.num_states, 1);
    auto comp = detail::scc_over(
        chain.num_states, alive,
        [&](uint32_t v, std::vector<uint32_t>& out) {
            for (const auto& e : chain.rows[v][0].support) out.push_back(e.target);
        },
        num_sccs);
    std::vector<char> bottom(num_sccs, 1);
    for (uint32_t v = 0; v < chain.num_states; ++v)
        for (const auto& e : chain.rows[v][0].support)
            if (comp[e.target] != comp[v]) bottom[comp[v]] = 0;

    Bits targets(chain.num_states);
    for (int c = 0; c < num_sccs; ++c) {
        if (!bottom[c]) continue;
        bool accepting = false;
        for (const RabinPair& pair : d.pairs) {
            bool hits_l = false, hits_k = false;
            for (uint32_t v = 0; v < chain.num_states; ++v) {
                if (comp[v] != c) continue;
                hits_l = hits_l || pair.L[states[v].second];
                hits_k = hits_k || pair.K[states[v].second];
            }
            if (!hits_l && hits_k) accepting = true;
        }
        if (accepting)
            for (uint32_t v = 0; v < chain.num_states; ++v)
                if (comp[v] == c) targets.set(v);
    }
    return mc_reachability(chain, targets)[init];
}

}  // namespace hypersynth
