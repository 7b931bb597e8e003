#include "testutil.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace hypersynth::test {

Mdp random_mdp(Rng& rng, uint32_t max_states, uint32_t max_actions,
               const std::vector<std::string>& aps, double label_density) {
    std::uniform_int_distribution<uint32_t> nstates(2, max_states);
    std::uniform_int_distribution<uint32_t> nacts(1, max_actions);
    Mdp m;
    m.num_states = nstates(rng);
    uint32_t total_actions = std::max<uint32_t>(2, max_actions);
    for (uint32_t a = 0; a < total_actions; ++a) m.action_names.push_back("a" + std::to_string(a));
    m.ap_names = aps;
    m.enabled.resize(m.num_states);
    m.rows.resize(m.num_states);
    m.labels.assign(m.num_states, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (StateId s = 0; s < m.num_states; ++s) {
        uint32_t k = std::min(nacts(rng), total_actions);
        std::vector<uint32_t> pool(total_actions);
        for (uint32_t i = 0; i < total_actions; ++i) pool[i] = i;
        std::shuffle(pool.begin(), pool.end(), rng);
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        for (uint32_t a : pool) {
            // dyadic weights over 1-3 distinct targets
            std::uniform_int_distribution<uint32_t> nsupp(1, std::min<uint32_t>(3, m.num_states));
            uint32_t supp = nsupp(rng);
            std::set<StateId> targets;
            std::uniform_int_distribution<StateId> pick(0, m.num_states - 1);
            while (targets.size() < supp) targets.insert(pick(rng));
            std::vector<double> weights;
            double total = 0.0;
            for (size_t i = 0; i < targets.size(); ++i) {
                std::uniform_int_distribution<int> w8(1, 8);
                weights.push_back(w8(rng));
                total += weights.back();
            }
            Distribution d;
            size_t i = 0;
            for (StateId t : targets) d.support.push_back({t, weights[i++] / total});
            d.normalize_layout();
            m.enabled[s].push_back(a);
            m.rows[s].push_back(std::move(d));
        }
        for (uint32_t ap = 0; ap < m.num_aps(); ++ap)
            if (unit(rng) < label_density) m.labels[s] |= uint64_t{1} << ap;
    }
    return m;
}

Mdp random_mc(Rng& rng, uint32_t max_states, const std::vector<std::string>& aps,
              double label_density) {
    return random_mdp(rng, max_states, 1, aps, label_density);
}

LassoWord random_lasso(Rng& rng, const std::vector<std::string>& aps, int arity, size_t max_prefix,
                       size_t max_loop) {
    LassoWord w;
    w.ap_names = aps;
    w.arity = arity;
    std::uniform_int_distribution<size_t> plen(0, max_prefix), llen(1, max_loop);
    std::uniform_int_distribution<uint64_t> letter(0, (uint64_t{1} << aps.size()) - 1);
    auto make_letter = [&] {
        std::vector<uint64_t> l(arity);
        for (int i = 0; i < arity; ++i) l[i] = letter(rng);
        return l;
    };
    size_t p = plen(rng), l = llen(rng);
    for (size_t i = 0; i < p; ++i) w.prefix.push_back(make_letter());
    for (size_t i = 0; i < l; ++i) w.loop.push_back(make_letter());
    return w;
}

LtlPtr random_ltl(Rng& rng, const std::vector<std::string>& aps, int arity, int depth) {
    std::uniform_int_distribution<int> agent(1, arity);
    std::uniform_int_distribution<size_t> ap(0, aps.size() - 1);
    auto atom = [&] {
        int k = agent(rng);
        return ltl_atom(aps[ap(rng)], std::to_string(k), k - 1);
    };
    if (depth == 0) return atom();
    std::uniform_int_distribution<int> op(0, 9);
    switch (op(rng)) {
        case 0: return atom();
        case 1: return ltl_not(random_ltl(rng, aps, arity, depth - 1));
        case 2:
            return ltl_and(random_ltl(rng, aps, arity, depth - 1),
                           random_ltl(rng, aps, arity, depth - 1));
        case 3:
            return ltl_or(random_ltl(rng, aps, arity, depth - 1),
                          random_ltl(rng, aps, arity, depth - 1));
        case 4: return ltl_next(random_ltl(rng, aps, arity, depth - 1));
        case 5:
            return ltl_until(random_ltl(rng, aps, arity, depth - 1),
                             random_ltl(rng, aps, arity, depth - 1));
        case 6:
            return ltl_release(random_ltl(rng, aps, arity, depth - 1),
                               random_ltl(rng, aps, arity, depth - 1));
        case 7: return ltl_eventually(random_ltl(rng, aps, arity, depth - 1));
        case 8: return ltl_globally(random_ltl(rng, aps, arity, depth - 1));
        default:
            return ltl_xor(random_ltl(rng, aps, arity, depth - 1),
                           random_ltl(rng, aps, arity, depth - 1));
    }
}

namespace {

struct RefEval {
    const LassoWord& w;
    size_t n;
    std::vector<std::vector<uint64_t>> letters;
    std::map<std::string, std::vector<char>> memo;

    explicit RefEval(const LassoWord& word) : w(word), n(word.positions()) {
        for (const auto& l : w.prefix) letters.push_back(l);
        for (const auto& l : w.loop) letters.push_back(l);
    }
    size_t succ(size_t i) const { return i + 1 < n ? i + 1 : w.prefix.size(); }

    bool atom_holds(const LtlPtr& f, size_t i) const {
        for (size_t b = 0; b < w.ap_names.size(); ++b)
            if (w.ap_names[b] == f->ap) return (letters[i][f->agent] >> b) & 1;
        return false;
    }

    const std::vector<char>& eval(const LtlPtr& f) {
        std::string key = print_ltl(f);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        std::vector<char> v(n, 0);
        switch (f->op) {
            case LtlOp::True: v.assign(n, 1); break;
            case LtlOp::False: break;
            case LtlOp::Atom:
                for (size_t i = 0; i < n; ++i) v[i] = atom_holds(f, i);
                break;
            case LtlOp::Not: {
                auto a = eval(f->lhs);
                for (size_t i = 0; i < n; ++i) v[i] = !a[i];
                break;
            }
            case LtlOp::And: {
                auto a = eval(f->lhs), b = eval(f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[i] && b[i];
                break;
            }
            case LtlOp::Or: {
                auto a = eval(f->lhs), b = eval(f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[i] || b[i];
                break;
            }
            case LtlOp::Xor: {
                auto a = eval(f->lhs), b = eval(f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[i] != b[i];
                break;
            }
            case LtlOp::Implies: {
                auto a = eval(f->lhs), b = eval(f->rhs);
                for (size_t i = 0; i < n; ++i) v[i] = !a[i] || b[i];
                break;
            }
            case LtlOp::Next: {
                auto a = eval(f->lhs);
                for (size_t i = 0; i < n; ++i) v[i] = a[succ(i)];
                break;
            }
            case LtlOp::Until:
            case LtlOp::Eventually: {
                auto b = eval(f->op == LtlOp::Until ? f->rhs : f->lhs);
                std::vector<char> a(n, 1);
                if (f->op == LtlOp::Until) a = eval(f->lhs);
                // direct scan; after n steps every canonical position repeats
                for (size_t i = 0; i < n; ++i) {
                    size_t j = i;
                    for (size_t step = 0; step <= n; ++step) {
                        if (b[j]) {
                            v[i] = 1;
                            break;
                        }
                        if (!a[j]) break;
                        j = succ(j);
                    }
                }
                break;
            }
            case LtlOp::Release:
            case LtlOp::Globally: {
                auto b = eval(f->op == LtlOp::Release ? f->rhs : f->lhs);
                std::vector<char> a(n, 0);
                if (f->op == LtlOp::Release) a = eval(f->lhs);
                for (size_t i = 0; i < n; ++i) {
                    size_t j = i;
                    v[i] = 1;
                    for (size_t step = 0; step <= n; ++step) {
                        if (!b[j]) {
                            v[i] = 0;
                            break;
                        }
                        if (a[j]) break;  // release discharged
                        j = succ(j);
                    }
                }
                break;
            }
        }
        return memo.emplace(std::move(key), std::move(v)).first->second;
    }
};

}  // namespace

bool lasso_reference_eval(const LtlPtr& f, const LassoWord& w) {
    RefEval ev(w);
    return ev.eval(f)[0] != 0;
}

std::vector<std::vector<uint32_t>> brute_force_mecs(const Mdp& m) {
    const uint32_t n = m.num_states;
    std::vector<std::vector<uint32_t>> candidates;
    for (uint32_t mask = 1; mask < (1u << n); ++mask) {
        std::vector<uint32_t> states;
        for (uint32_t s = 0; s < n; ++s)
            if (mask & (1u << s)) states.push_back(s);
        // maximal internal action set per state
        bool ok = true;
        std::vector<std::vector<uint32_t>> acts(states.size());
        for (size_t i = 0; i < states.size() && ok; ++i) {
            for (size_t k = 0; k < m.rows[states[i]].size(); ++k) {
                bool inside = true;
                for (const auto& e : m.rows[states[i]][k].support)
                    inside = inside && (mask & (1u << e.target));
                if (inside) acts[i].push_back(static_cast<uint32_t>(k));
            }
            ok = !acts[i].empty();
        }
        if (!ok) continue;
        // strong connectivity under the internal actions
        auto reaches_all = [&](size_t from) {
            std::vector<char> seen(states.size(), 0);
            std::vector<size_t> work{from};
            seen[from] = 1;
            while (!work.empty()) {
                size_t i = work.back();
                work.pop_back();
                for (uint32_t k : acts[i])
                    for (const auto& e : m.rows[states[i]][k].support) {
                        size_t j = std::lower_bound(states.begin(), states.end(), e.target) -
                                   states.begin();
                        if (!seen[j]) {
                            seen[j] = 1;
                            work.push_back(j);
                        }
                    }
            }
            return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
        };
        bool connected = true;
        for (size_t i = 0; i < states.size() && connected; ++i) connected = reaches_all(i);
        if (connected) candidates.push_back(states);
    }
    // keep inclusion-maximal candidates
    std::vector<std::vector<uint32_t>> mecs;
    for (const auto& c : candidates) {
        bool dominated = false;
        for (const auto& d : candidates)
            if (d.size() > c.size() && std::includes(d.begin(), d.end(), c.begin(), c.end()))
                dominated = true;
        if (!dominated) mecs.push_back(c);
    }
    std::sort(mecs.begin(), mecs.end());
    mecs.erase(std::unique(mecs.begin(), mecs.end()), mecs.end());
    return mecs;
}

std::vector<double> brute_force_reachability(const Mdp& m, const std::vector<StateId>& targets,
                                             bool maximize) {
    Bits t(m.num_states);
    for (StateId s : targets) t.set(s);
    std::vector<double> best(m.num_states, maximize ? 0.0 : 1.0);
    std::vector<size_t> idx(m.num_states, 0);
    while (true) {
        MemorylessPolicy p;
        p.choice.resize(m.num_states);
        for (StateId s = 0; s < m.num_states; ++s) p.choice[s] = m.enabled[s][idx[s]];
        Mdp chain = induce_mc(m, p);
        std::vector<double> v = mc_reachability(chain, t);
        for (StateId s = 0; s < m.num_states; ++s)
            best[s] = maximize ? std::max(best[s], v[s]) : std::min(best[s], v[s]);
        uint32_t s = m.num_states;
        bool more = false;
        while (s-- > 0) {
            if (++idx[s] < m.enabled[s].size()) {
                more = true;
                break;
            }
            idx[s] = 0;
        }
        if (!more) break;
    }
    return best;
}

std::vector<char> brute_force_success_set(const ProductMdp& p) {
    std::vector<char> in_set(p.num_states, 0);
    std::vector<uint32_t> idx(p.num_states, 0);
    while (true) {
        // recurrent classes of the induced chain
        int num_sccs = 0;
        std::vector<char> alive(p.num_states, 1);
        auto comp = detail::scc_over(
            p.num_states, alive,
            [&](uint32_t s, std::vector<uint32_t>& out) {
                uint32_t rowi = p.row_index(s, idx[s]);
                for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e)
                    out.push_back(p.entries[e].target);
            },
            num_sccs);
        std::vector<char> bottom(num_sccs, 1);
        for (uint32_t s = 0; s < p.num_states; ++s) {
            uint32_t rowi = p.row_index(s, idx[s]);
            for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e)
                if (comp[p.entries[e].target] != comp[s]) bottom[comp[s]] = 0;
        }
        for (int c = 0; c < num_sccs; ++c) {
            if (!bottom[c]) continue;
            bool accepting = false;
            for (const RabinPair& pair : p.dra.pairs) {
                bool l = false, k = false;
                for (uint32_t s = 0; s < p.num_states; ++s)
                    if (comp[s] == c) {
                        l = l || pair.L[p.state_q[s]];
                        k = k || pair.K[p.state_q[s]];
                    }
                if (!l && k) accepting = true;
            }
            if (accepting)
                for (uint32_t s = 0; s < p.num_states; ++s)
                    if (comp[s] == c) in_set[s] = 1;
        }
        uint32_t s = p.num_states;
        bool more = false;
        while (s-- > 0) {
            if (++idx[s] < p.num_rows(s)) {
                more = true;
                break;
            }
            idx[s] = 0;
        }
        if (!more) break;
    }
    return in_set;
}

bool brute_force_consistent(const ProductMdp& p, const std::vector<uint32_t>& rows) {
    // reachable under the policy
    std::vector<char> seen(p.num_states, 0);
    std::vector<uint32_t> work;
    for (uint32_t s : p.initials)
        if (!seen[s]) {
            seen[s] = 1;
            work.push_back(s);
        }
    while (!work.empty()) {
        uint32_t s = work.back();
        work.pop_back();
        uint32_t rowi = p.row_index(s, rows[s]);
        for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e)
            if (!seen[p.entries[e].target]) {
                seen[p.entries[e].target] = 1;
                work.push_back(p.entries[e].target);
            }
    }
    std::map<std::pair<uint32_t, StateId>, ActionId> assignment;
    for (uint32_t s = 0; s < p.num_states; ++s) {
        if (!seen[s]) continue;
        const ActionId* acts = p.actions_of_row(p.row_index(s, rows[s]));
        for (uint32_t i = 0; i < p.m; ++i) {
            auto key = std::make_pair(p.bindings.policy_var_of_agent[i], p.local(s, i));
            auto it = assignment.find(key);
            if (it == assignment.end())
                assignment.emplace(key, acts[i]);
            else if (it->second != acts[i])
                return false;
        }
    }
    return true;
}

std::string two_agent_spec(const std::string& body, StateId init1, StateId init2,
                           bool shared_policy) {
    std::ostringstream out;
    if (shared_policy) {
        out << "exists (p1)\n";
        out << "forall x1 in {" << init1 << "} (p1)\n";
        out << "forall x2 in {" << init2 << "} (p1)\n";
    } else {
        out << "exists (p1 p2)\n";
        out << "forall x1 in {" << init1 << "} (p1)\n";
        out << "forall x2 in {" << init2 << "} (p2)\n";
    }
    out << "Pmax [ " << body << " ]\n";
    return out.str();
}

}  // namespace hypersynth::test
