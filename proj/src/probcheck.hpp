#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "bits.hpp"
#include "mdp.hpp"
#include "product.hpp"

namespace hypersynth {

constexpr uint32_t kNoRow = UINT32_MAX;
constexpr double kInfReward = std::numeric_limits<double>::infinity();

/// Default value-iteration stopping threshold.
constexpr double kDefaultEpsilon = 1e-8;

// Model views give the analysis algorithms one interface over plain MDPs and
// restricted products: num_states / num_rows / row_enabled / row.

struct MdpView {
    const Mdp* m;
    explicit MdpView(const Mdp& mdp) : m(&mdp) {}
    uint32_t num_states() const { return m->num_states; }
    uint32_t num_rows(uint32_t s) const { return static_cast<uint32_t>(m->rows[s].size()); }
    bool row_enabled(uint32_t, uint32_t) const { return true; }
    std::span<const TransitionEntry> row(uint32_t s, uint32_t k) const {
        return {m->rows[s][k].support.data(), m->rows[s][k].support.size()};
    }
};

struct ProductView {
    const ProductMdp* p;
    const ActionRestriction* r;
    explicit ProductView(const ProductMdp& prod, const ActionRestriction* restr = nullptr)
        : p(&prod), r(restr) {}
    explicit ProductView(const RestrictedProduct& rp) : p(rp.product), r(rp.restriction) {}
    uint32_t num_states() const { return p->num_states; }
    uint32_t num_rows(uint32_t s) const { return p->num_rows(s); }
    bool row_enabled(uint32_t s, uint32_t k) const {
        return r == nullptr || p->row_allowed(*r, s, k);
    }
    std::span<const TransitionEntry> row(uint32_t s, uint32_t k) const {
        uint32_t rowi = p->row_index(s, k);
        return {p->entries.data() + p->row_entry_begin[rowi],
                p->row_entry_begin[rowi + 1] - p->row_entry_begin[rowi]};
    }
};

/// Maximal end component: states with their retained action rows.
struct Mec {
    std::vector<uint32_t> states;
    std::vector<std::vector<uint32_t>> rows;  // retained row indices, aligned with states
};

struct ReachResult {
    std::vector<double> values;
    std::vector<uint32_t> row_choice;  // per state; kNoRow where irrelevant
};

/// Rabin success set of a (restricted) product plus memoryless in-MEC
/// strategies that realize acceptance from every success state.
struct SuccessSet {
    Bits states;
    std::vector<uint32_t> strategy_row;  // kNoRow outside the set
};

struct RabinResult {
    std::vector<double> values;
    std::vector<uint32_t> row_choice;
    SuccessSet success;
};

// --- maximal end components -----------------------------------------------------

namespace detail {
// SCC over retained rows; comp = -1 marks removed states.
template <typename Succs>
std::vector<int> scc_over(uint32_t n, const std::vector<char>& alive, Succs succs, int& num_sccs);
}  // namespace detail

template <typename View>
std::vector<Mec> mec_decomposition(const View& v, const Bits* state_mask = nullptr) {
    const uint32_t n = v.num_states();
    std::vector<char> alive(n, 1);
    std::vector<std::vector<uint32_t>> retained(n);
    for (uint32_t s = 0; s < n; ++s) {
        if (state_mask && !state_mask->test(s)) {
            alive[s] = 0;
            continue;
        }
        for (uint32_t k = 0; k < v.num_rows(s); ++k)
            if (v.row_enabled(s, k)) retained[s].push_back(k);
        if (retained[s].empty()) alive[s] = 0;
    }

    bool changed = true;
    std::vector<int> comp;
    int num_sccs = 0;
    while (changed) {
        changed = false;
        comp = detail::scc_over(
            n, alive,
            [&](uint32_t s, std::vector<uint32_t>& out) {
                for (uint32_t k : retained[s])
                    for (const auto& e : v.row(s, k))
                        if (alive[e.target]) out.push_back(e.target);
            },
            num_sccs);
        for (uint32_t s = 0; s < n; ++s) {
            if (!alive[s]) continue;
            auto& rows = retained[s];
            size_t before = rows.size();
            rows.erase(std::remove_if(rows.begin(), rows.end(),
                                      [&](uint32_t k) {
                                          for (const auto& e : v.row(s, k))
                                              if (!alive[e.target] || comp[e.target] != comp[s]) return true;
                                          return false;
                                      }),
                       rows.end());
            if (rows.size() != before) changed = true;
            if (rows.empty()) {
                alive[s] = 0;
                changed = true;
            }
        }
    }

    std::vector<Mec> mecs;
    std::vector<int> mec_of(static_cast<size_t>(num_sccs), -1);
    for (uint32_t s = 0; s < n; ++s) {
        if (!alive[s]) continue;
        int c = comp[s];
        if (mec_of[c] < 0) {
            mec_of[c] = static_cast<int>(mecs.size());
            mecs.emplace_back();
        }
        Mec& m = mecs[static_cast<size_t>(mec_of[c])];
        m.states.push_back(s);
        m.rows.push_back(retained[s]);
    }
    return mecs;
}

// --- qualitative sets -------------------------------------------------------------

/// States that cannot reach the targets under any policy.
template <typename View>
Bits prob0_max(const View& v, const Bits& targets) {
    const uint32_t n = v.num_states();
    std::vector<std::vector<uint32_t>> preds(n);
    for (uint32_t s = 0; s < n; ++s)
        for (uint32_t k = 0; k < v.num_rows(s); ++k) {
            if (!v.row_enabled(s, k)) continue;
            for (const auto& e : v.row(s, k)) preds[e.target].push_back(s);
        }
    Bits reach(n);
    std::vector<uint32_t> work;
    targets.for_each([&](size_t t) {
        reach.set(t);
        work.push_back(static_cast<uint32_t>(t));
    });
    while (!work.empty()) {
        uint32_t t = work.back();
        work.pop_back();
        for (uint32_t p : preds[t])
            if (!reach.test(p)) {
                reach.set(p);
                work.push_back(p);
            }
    }
    Bits out(n);
    for (uint32_t s = 0; s < n; ++s)
        if (!reach.test(s)) out.set(s);
    return out;
}

/// States with a policy reaching the targets almost surely (Prob1E).
template <typename View>
Bits prob1_max(const View& v, const Bits& targets) {
    const uint32_t n = v.num_states();
    Bits u(n);
    for (uint32_t s = 0; s < n; ++s) u.set(s);
    while (true) {
        // attractor within u: rows staying in u with progress into r
        Bits r = targets;
        bool grew = true;
        while (grew) {
            grew = false;
            for (uint32_t s = 0; s < n; ++s) {
                if (r.test(s) || !u.test(s)) continue;
                for (uint32_t k = 0; k < v.num_rows(s) && !r.test(s); ++k) {
                    if (!v.row_enabled(s, k)) continue;
                    bool stays = true, progresses = false;
                    for (const auto& e : v.row(s, k)) {
                        stays = stays && u.test(e.target);
                        progresses = progresses || r.test(e.target);
                    }
                    if (stays && progresses) {
                        r.set(s);
                        grew = true;
                    }
                }
            }
        }
        if (r == u) return u;
        u = r;
    }
}

// --- reachability value iteration ---------------------------------------------------

template <typename View>
ReachResult optimal_reachability(const View& v, const Bits& targets, bool maximize,
                                 double eps = kDefaultEpsilon) {
    const uint32_t n = v.num_states();
    ReachResult res;
    res.values.assign(n, 0.0);
    res.row_choice.assign(n, kNoRow);

    Bits fixed(n);
    if (maximize) {
        Bits zero = prob0_max(v, targets);
        Bits one = prob1_max(v, targets);
        for (uint32_t s = 0; s < n; ++s) {
            if (one.test(s)) {
                res.values[s] = 1.0;
                fixed.set(s);
            } else if (zero.test(s)) {
                fixed.set(s);
            }
        }
    } else {
        // min mode: value 0 wherever some policy avoids the targets forever
        Bits avoid(n);
        {
            std::vector<char> safe(n, 1);
            targets.for_each([&](size_t t) { safe[t] = 0; });
            bool changed = true;
            while (changed) {
                changed = false;
                for (uint32_t s = 0; s < n; ++s) {
                    if (!safe[s]) continue;
                    bool ok = false;
                    for (uint32_t k = 0; k < v.num_rows(s) && !ok; ++k) {
                        if (!v.row_enabled(s, k)) continue;
                        bool stays = true;
                        for (const auto& e : v.row(s, k)) stays = stays && safe[e.target];
                        ok = ok || stays;
                    }
                    if (!ok) {
                        safe[s] = 0;
                        changed = true;
                    }
                }
            }
            for (uint32_t s = 0; s < n; ++s)
                if (safe[s]) avoid.set(s);
        }
        for (uint32_t s = 0; s < n; ++s)
            if (avoid.test(s)) fixed.set(s);
    }
    targets.for_each([&](size_t t) {
        res.values[t] = 1.0;
        fixed.set(t);
    });

    // Gauss-Seidel iteration on the remaining states
    const int max_iters = 2'000'000;
    for (int it = 0; it < max_iters; ++it) {
        double residual = 0.0;
        for (uint32_t s = 0; s < n; ++s) {
            if (fixed.test(s)) continue;
            double best = maximize ? 0.0 : std::numeric_limits<double>::max();
            bool any = false;
            for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                if (!v.row_enabled(s, k)) continue;
                double q = 0.0;
                for (const auto& e : v.row(s, k)) q += e.prob * res.values[e.target];
                best = maximize ? std::max(best, q) : std::min(best, q);
                any = true;
            }
            if (!any) best = 0.0;
            residual = std::max(residual, std::abs(best - res.values[s]));
            res.values[s] = best;
        }
        if (residual < eps) break;
    }

    // policy extraction
    const double tol = std::max(eps * 10.0, 1e-9);
    if (maximize) {
        // progress-aware greedy: pick value-optimal rows that can step toward
        // states already known to realize their value
        Bits done = targets;
        for (uint32_t s = 0; s < n; ++s)
            if (res.values[s] == 0.0 || targets.test(s)) {
                done.set(s);
                for (uint32_t k = 0; k < v.num_rows(s); ++k)
                    if (v.row_enabled(s, k)) {
                        res.row_choice[s] = k;
                        break;
                    }
            }
        bool grew = true;
        while (grew) {
            grew = false;
            for (uint32_t s = 0; s < n; ++s) {
                if (done.test(s)) continue;
                for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                    if (!v.row_enabled(s, k)) continue;
                    double q = 0.0;
                    bool progresses = false;
                    for (const auto& e : v.row(s, k)) {
                        q += e.prob * res.values[e.target];
                        progresses = progresses || done.test(e.target);
                    }
                    if (progresses && q >= res.values[s] - tol) {
                        res.row_choice[s] = k;
                        done.set(s);
                        grew = true;
                        break;
                    }
                }
            }
        }
        // anything left unassigned cannot realize value (numeric corner); fall back
        for (uint32_t s = 0; s < n; ++s)
            if (res.row_choice[s] == kNoRow)
                for (uint32_t k = 0; k < v.num_rows(s); ++k)
                    if (v.row_enabled(s, k)) {
                        res.row_choice[s] = k;
                        break;
                    }
    } else {
        // greedy minimum realizes the value (least-fixpoint argument)
        for (uint32_t s = 0; s < n; ++s) {
            double best = std::numeric_limits<double>::max();
            for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                if (!v.row_enabled(s, k)) continue;
                double q = 0.0;
                for (const auto& e : v.row(s, k)) q += e.prob * res.values[e.target];
                if (q < best - tol || res.row_choice[s] == kNoRow) {
                    best = std::min(best, q);
                    res.row_choice[s] = k;
                }
            }
        }
    }
    return res;
}

// --- expected total reward ------------------------------------------------------------

/// Expected total reward until the goal (infinity where the goal is not
/// almost-surely reachable in min mode / where some policy avoids it in max
/// mode, following the usual reachability-reward convention). With
/// has_goal == false computes the plain least-fixpoint total reward, finite
/// for models whose positive rewards drain into zero-reward absorbing parts.
template <typename View, typename RewardFn>
std::vector<double> expected_total_reward_view(const View& v, RewardFn reward, const Bits& goal,
                                               bool has_goal, bool maximize,
                                               double eps = kDefaultEpsilon,
                                               std::vector<uint32_t>* row_choice = nullptr) {
    const uint32_t n = v.num_states();
    std::vector<double> val(n, 0.0);
    std::vector<char> finite(n, 1);
    Bits allowed_rows_domain(n);

    if (has_goal) {
        if (maximize) {
            // finite iff every policy reaches the goal almost surely
            Bits safe(n);
            {
                std::vector<char> s_ok(n, 1);
                goal.for_each([&](size_t t) { s_ok[t] = 0; });
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (uint32_t s = 0; s < n; ++s) {
                        if (!s_ok[s]) continue;
                        bool ok = false;
                        for (uint32_t k = 0; k < v.num_rows(s) && !ok; ++k) {
                            if (!v.row_enabled(s, k)) continue;
                            bool stays = true;
                            for (const auto& e : v.row(s, k)) stays = stays && s_ok[e.target];
                            ok = ok || stays;
                        }
                        if (!ok) {
                            s_ok[s] = 0;
                            changed = true;
                        }
                    }
                }
                for (uint32_t s = 0; s < n; ++s)
                    if (s_ok[s]) safe.set(s);
            }
            // forward closure of reachability into `safe` marks infinite states
            Bits can_avoid = safe;
            bool grew = true;
            while (grew) {
                grew = false;
                for (uint32_t s = 0; s < n; ++s) {
                    if (can_avoid.test(s) || goal.test(s)) continue;
                    for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                        if (!v.row_enabled(s, k)) continue;
                        for (const auto& e : v.row(s, k))
                            if (can_avoid.test(e.target)) {
                                can_avoid.set(s);
                                grew = true;
                                break;
                            }
                        if (can_avoid.test(s)) break;
                    }
                }
            }
            for (uint32_t s = 0; s < n; ++s)
                if (can_avoid.test(s) && !goal.test(s)) finite[s] = 0;
        } else {
            Bits p1 = prob1_max(v, goal);
            for (uint32_t s = 0; s < n; ++s)
                if (!p1.test(s)) finite[s] = 0;
        }
    }

    if (row_choice) row_choice->assign(n, kNoRow);
    const int max_iters = 2'000'000;
    const double divergence_cap = 1e15;
    for (int it = 0; it < max_iters; ++it) {
        double residual = 0.0;
        for (uint32_t s = 0; s < n; ++s) {
            if (!finite[s] || (has_goal && goal.test(s))) continue;
            double best = maximize ? -std::numeric_limits<double>::max()
                                   : std::numeric_limits<double>::max();
            bool any = false;
            for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                if (!v.row_enabled(s, k)) continue;
                // min mode must stick to rows that keep the goal almost-surely
                // reachable; rows escaping the finite region cost infinity
                bool stays_finite = true;
                double q = reward(s, k);
                for (const auto& e : v.row(s, k)) {
                    if (!finite[e.target]) stays_finite = false;
                    q += e.prob * val[e.target];
                }
                if (!stays_finite) {
                    if (maximize) {
                        finite[s] = 0;  // max prefers the infinite branch
                        break;
                    }
                    continue;
                }
                best = maximize ? std::max(best, q) : std::min(best, q);
                any = true;
            }
            if (!finite[s]) continue;
            if (!any) continue;  // all rows escape; value stays pending
            residual = std::max(residual, std::abs(best - val[s]));
            val[s] = best;
            if (best > divergence_cap) finite[s] = 0;
        }
        if (residual < eps) break;
    }
    for (uint32_t s = 0; s < n; ++s)
        if (!finite[s]) val[s] = kInfReward;

    if (row_choice) {
        const double tol = std::max(eps * 10.0, 1e-9);
        for (uint32_t s = 0; s < n; ++s) {
            if (!finite[s] || (has_goal && goal.test(s))) {
                for (uint32_t k = 0; k < v.num_rows(s); ++k)
                    if (v.row_enabled(s, k)) {
                        (*row_choice)[s] = k;
                        break;
                    }
                continue;
            }
            for (uint32_t k = 0; k < v.num_rows(s); ++k) {
                if (!v.row_enabled(s, k)) continue;
                bool stays_finite = true;
                double q = reward(s, k);
                for (const auto& e : v.row(s, k)) {
                    stays_finite = stays_finite && finite[e.target];
                    q += e.prob * val[e.target];
                }
                if (!stays_finite) continue;
                if (std::abs(q - val[s]) <= tol) {
                    (*row_choice)[s] = k;
                    break;
                }
            }
            if ((*row_choice)[s] == kNoRow)
                for (uint32_t k = 0; k < v.num_rows(s); ++k)
                    if (v.row_enabled(s, k)) {
                        (*row_choice)[s] = k;
                        break;
                    }
        }
    }
    return val;
}

// --- Mdp-level wrappers -----------------------------------------------------------

std::pair<std::vector<double>, MemorylessPolicy> optimal_reachability(
    const Mdp& m, const std::vector<StateId>& targets, bool maximize, double eps = kDefaultEpsilon);

std::pair<std::vector<double>, MemorylessPolicy> expected_total_reward(
    const Mdp& m, const RewardStructure& r, const std::vector<StateId>& goal, bool maximize,
    double eps = kDefaultEpsilon);

// --- product-level analyses ---------------------------------------------------------

/// Success set U_Acc: per Rabin pair (L,K), states of MECs of the L-removed
/// sub-product that intersect K, with a recorded strategy that stays in the
/// MEC, avoids L, and revisits K almost surely.
SuccessSet accepting_success_set(const RestrictedProduct& rp);

/// States of end components realizing the complement of the Rabin condition
/// (every pair visits L infinitely often or K only finitely often).
Bits rejecting_success_set(const RestrictedProduct& rp);

/// Optimal Rabin satisfaction probability on the product. In max mode the
/// returned policy stitches the reachability policy with in-MEC strategies so
/// it realizes the value; in min mode the value is computed through the
/// complemented acceptance on the same product.
RabinResult rabin_optimal_policy(const RestrictedProduct& rp, bool maximize,
                                 double eps = kDefaultEpsilon);

/// Exact satisfaction probability of a DRA objective on a product-shaped
/// Markov chain (labels named `ap@k` as produced by the induced-chain
/// builders). Independent of the synchronized-product machinery: pairs the
/// chain with the automaton reading target-state labels and solves the
/// reachability of accepting bottom SCCs.
double mc_satisfaction_probability(const Mdp& mc, const Dra& d, StateId initial, uint32_t agent_count);

/// Exact reachability values on a Markov chain (one row per state): direct
/// linear solve for small chains, high-precision iteration otherwise.
std::vector<double> mc_reachability(const Mdp& mc, const Bits& targets);

/// Expected total reward on a Markov chain; infinity where the goal is not
/// reached almost surely (when a goal is given).
std::vector<double> mc_total_reward(const Mdp& mc, const std::vector<double>& state_reward,
                                    const Bits& goal, bool has_goal);

namespace detail {
template <typename Succs>
std::vector<int> scc_over(uint32_t n, const std::vector<char>& alive, Succs succs, int& num_sccs) {
    std::vector<int> comp(n, -1), low(n, 0), idx(n, -1);
    std::vector<uint32_t> stack;
    std::vector<char> on_stack(n, 0);
    int counter = 0;
    num_sccs = 0;
    struct Frame {
        uint32_t v;
        size_t child = 0;
        std::vector<uint32_t> nexts;
    };
    std::vector<Frame> call;
    for (uint32_t root = 0; root < n; ++root) {
        if (!alive[root] || idx[root] != -1) continue;
        call.clear();
        call.push_back({root});
        idx[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        succs(root, call.back().nexts);
        while (!call.empty()) {
            Frame& f = call.back();
            if (f.child < f.nexts.size()) {
                uint32_t w = f.nexts[f.child++];
                if (idx[w] == -1) {
                    idx[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w});
                    succs(w, call.back().nexts);
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], idx[w]);
                }
            } else {
                if (low[f.v] == idx[f.v]) {
                    while (true) {
                        uint32_t w = stack.back();
                        stack.pop_back();
                        on_stack[w] = 0;
                        comp[w] = num_sccs;
                        if (w == f.v) break;
                    }
                    ++num_sccs;
                }
                uint32_t vv = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[vv]);
            }
        }
    }
    return comp;
}
}  // namespace detail

}  // namespace hypersynth
