#include "synthesis.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace hypersynth {

namespace {

uint64_t fnv1a(uint64_t seed, const std::string& s) {
    uint64_t h = seed ^ 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::string fmt_value(double v) {
    char buf[40];
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Product states reachable from the initials under the given row choices.
std::vector<uint32_t> policy_reachable(const ProductMdp& p, const ProductPolicy& rows) {
    Bits seen(p.num_states);
    std::vector<uint32_t> work;
    for (uint32_t s : p.initials)
        if (!seen.test(s)) {
            seen.set(s);
            work.push_back(s);
        }
    while (!work.empty()) {
        uint32_t s = work.back();
        work.pop_back();
        uint32_t k = rows[s];
        if (k == kNoRow) continue;
        uint32_t rowi = p.row_index(s, k);
        for (uint32_t e = p.row_entry_begin[rowi]; e < p.row_entry_begin[rowi + 1]; ++e) {
            uint32_t t = p.entries[e].target;
            if (!seen.test(t)) {
                seen.set(t);
                work.push_back(t);
            }
        }
    }
    std::vector<uint32_t> out;
    seen.for_each([&](size_t s) { out.push_back(static_cast<uint32_t>(s)); });
    return out;  // ascending by construction of for_each
}

struct HoleScan {
    // first assignment per hole plus the set of all assigned actions
    struct Entry {
        ActionId action = kNoAction;
        uint32_t state = 0;
        uint32_t agent = 0;
        uint64_t action_set = 0;
    };
    std::vector<Entry> entries;  // [var * num_locals + local]
    uint32_t num_locals = 0;

    Entry& at(uint32_t var, StateId local) { return entries[var * num_locals + local]; }
};

HoleScan scan_holes(const ProductMdp& p, const ProductPolicy& rows, ConsistencyReport* report) {
    HoleScan scan;
    scan.num_locals = p.agent.num_states;
    scan.entries.resize(size_t{p.bindings.num_policy_vars} * p.agent.num_states);
    Bits conflicted(scan.entries.size());

    for (uint32_t s : policy_reachable(p, rows)) {
        uint32_t k = rows[s];
        if (k == kNoRow) throw SynthesisError("policy undefined on reachable product state");
        const ActionId* acts = p.actions_of_row(p.row_index(s, k));
        for (uint32_t i = 0; i < p.m; ++i) {
            uint32_t var = p.bindings.policy_var_of_agent[i];
            StateId local = p.local(s, i);
            auto& e = scan.at(var, local);
            e.action_set |= uint64_t{1} << acts[i];
            if (e.action == kNoAction) {
                e.action = acts[i];
                e.state = s;
                e.agent = i;
            } else if (e.action != acts[i] && report != nullptr) {
                size_t hole = size_t{var} * scan.num_locals + local;
                if (!conflicted.test(hole)) {
                    conflicted.set(hole);
                    Conflict c;
                    c.var = var;
                    c.local = local;
                    c.action_a = e.action;
                    c.action_b = acts[i];
                    c.state_a = e.state;
                    c.state_b = s;
                    c.agent_i = e.agent;
                    c.agent_j = i;
                    c.kind = e.agent == i ? ConflictKind::LocalObservability
                                          : ConflictKind::PolicyBinding;
                    report->conflicts.push_back(c);
                }
            }
        }
    }
    return scan;
}

}  // namespace

ConsistencyReport check_consistency(const ProductMdp& p, const ProductPolicy& rows) {
    ConsistencyReport report;
    scan_holes(p, rows, &report);
    return report;
}

PolicyTuple factorize(const ProductMdp& p, const ProductPolicy& rows) {
    ConsistencyReport report;
    HoleScan scan = scan_holes(p, rows, &report);
    if (!report.consistent()) throw SynthesisError("cannot factorize an inconsistent policy");
    PolicyTuple t;
    t.choice.assign(p.bindings.num_policy_vars, std::vector<ActionId>(p.agent.num_states, kNoAction));
    for (uint32_t var = 0; var < p.bindings.num_policy_vars; ++var)
        for (StateId s = 0; s < p.agent.num_states; ++s) {
            const auto& e = scan.at(var, s);
            t.choice[var][s] = e.action != kNoAction ? e.action : p.agent.enabled[s].front();
        }
    return t;
}

ProductPolicy lift(const PolicyTuple& t, const ProductMdp& p) {
    ProductPolicy rows(p.num_states, kNoRow);
    std::vector<ActionId> acts(p.m);
    for (uint32_t s = 0; s < p.num_states; ++s) {
        for (uint32_t i = 0; i < p.m; ++i)
            acts[i] = t.choice[p.bindings.policy_var_of_agent[i]][p.local(s, i)];
        int k = p.find_row(s, acts);
        if (k < 0) throw SynthesisError("policy tuple picks a disabled action");
        rows[s] = static_cast<uint32_t>(k);
    }
    return rows;
}

PolicyTuple resolve_randomly(const ProductMdp& p, const ProductPolicy& rows,
                             const ConsistencyReport& report, uint64_t seed) {
    (void)report;  // the scan recomputes the assignment sets
    HoleScan scan = scan_holes(p, rows, nullptr);
    std::mt19937_64 rng(seed);
    PolicyTuple t;
    t.choice.assign(p.bindings.num_policy_vars, std::vector<ActionId>(p.agent.num_states, kNoAction));
    for (uint32_t var = 0; var < p.bindings.num_policy_vars; ++var)
        for (StateId s = 0; s < p.agent.num_states; ++s) {
            const auto& e = scan.at(var, s);
            if (e.action_set == 0) {
                t.choice[var][s] = p.agent.enabled[s].front();
                continue;
            }
            int count = __builtin_popcountll(e.action_set);
            if (count == 1) {
                t.choice[var][s] = e.action;
                continue;
            }
            std::uniform_int_distribution<int> pick(0, count - 1);
            int skip = pick(rng);
            uint64_t mask = e.action_set;
            for (int j = 0; j < skip; ++j) mask &= mask - 1;
            t.choice[var][s] = static_cast<ActionId>(__builtin_ctzll(mask));
        }
    return t;
}

std::vector<ActionRestriction> split(const ActionRestriction& r, const ConsistencyReport& report) {
    if (report.consistent()) throw SynthesisError("split requires a conflict");
    const Conflict& c = report.conflicts.front();
    uint64_t allowed = r.mask(c.var, c.local);
    uint64_t bit_a = uint64_t{1} << c.action_a;
    uint64_t bit_b = uint64_t{1} << c.action_b;
    if (!(allowed & bit_a) || !(allowed & bit_b))
        throw SynthesisError("conflict actions are not both allowed by the restriction");
    std::vector<ActionRestriction> children;
    for (uint64_t mask : {bit_a, bit_b, allowed & ~(bit_a | bit_b)}) {
        if (mask == 0) continue;  // degenerate third child
        ActionRestriction child = r;
        child.mask(c.var, c.local) = mask;
        children.push_back(std::move(child));
    }
    return children;
}

ConstraintClass classify_constraint(const RestrictedProduct& rp, const ProbConstraint& c,
                                    uint32_t initial_state, double eps, RabinResult* max_out,
                                    RabinResult* min_out) {
    if (c.kind != ProbConstraint::Kind::Threshold)
        throw SynthesisError("classification applies to threshold constraints");
    RabinResult rmax = rabin_optimal_policy(rp, true, eps);
    RabinResult rmin = rabin_optimal_policy(rp, false, eps);
    double vmax = rmax.values[initial_state];
    double vmin = rmin.values[initial_state];
    if (max_out) *max_out = std::move(rmax);
    if (min_out) *min_out = std::move(rmin);
    // SAT when the pessimal bound already meets the threshold; UNSAT when the
    // optimal bound fails it
    double pessimal = (c.cmp == Cmp::Ge || c.cmp == Cmp::Gt) ? vmin : vmax;
    double optimal = (c.cmp == Cmp::Ge || c.cmp == Cmp::Gt) ? vmax : vmin;
    if (cmp_holds(pessimal, c.cmp, c.bound)) return ConstraintClass::Sat;
    if (!cmp_holds(optimal, c.cmp, c.bound)) return ConstraintClass::Unsat;
    return ConstraintClass::Ambiguous;
}

// --- evaluation context ----------------------------------------------------------

EvalContext make_eval_context(const Mdp& model, const HyperFormula& spec, uint32_t memory_bits,
                              const Dra* override_dra, const AutomataLimits& limits) {
    {
        auto issues = check_well_formed(spec, model);
        if (!issues.empty()) {
            std::string msg = "specification not well-formed:";
            for (const auto& i : issues) msg += "\n  " + i;
            throw SpecError(msg);
        }
    }
    EvalContext ctx;
    ctx.original = model;
    ctx.memory_bits = memory_bits;
    ctx.work = unfold_memory(model, memory_bits);
    ctx.spec = resolve_spec(spec);
    ctx.expansion = expand_quantifiers(ctx.spec, model);
    for (Bindings& b : ctx.expansion.leaves)
        for (StateId& s : b.initial_state_of_agent) s = unfolded_state(s, 0, memory_bits);

    if (override_dra && ctx.spec.constraints.size() != 1)
        throw SynthesisError("an automaton override requires a single-constraint specification");
    for (const ProbConstraint& c : ctx.spec.constraints) {
        if (c.kind == ProbConstraint::Kind::RewardOptimize) {
            ctx.dras.push_back(ltl_to_dra(ltl_eventually(c.body), limits));
        } else if (override_dra) {
            ctx.dras.push_back(*override_dra);
        } else {
            ctx.dras.push_back(ltl_to_dra(c.body, limits));
        }
        int agent_idx = -1;
        if (!c.reward_agent.empty()) {
            for (size_t i = 0; i < ctx.spec.agents.size(); ++i)
                if (ctx.spec.agents[i].state_var == c.reward_agent) agent_idx = static_cast<int>(i);
        } else if (c.kind == ProbConstraint::Kind::RewardOptimize) {
            agent_idx = -1;  // charge all agents
        }
        ctx.reward_agent_index.push_back(agent_idx);
    }

    // graft the body tree onto every expansion leaf
    std::map<std::pair<uint32_t, uint32_t>, uint32_t> instance_id;
    auto intern_instance = [&](uint32_t c, uint32_t leaf) {
        auto key = std::make_pair(c, leaf);
        auto it = instance_id.find(key);
        if (it != instance_id.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(ctx.instances.size());
        instance_id.emplace(key, id);
        ctx.instances.push_back({c, leaf});
        return id;
    };
    std::function<uint32_t(uint32_t, uint32_t)> graft_body = [&](uint32_t body_node,
                                                                 uint32_t leaf) -> uint32_t {
        const BodyNode& bn = ctx.spec.body_nodes[body_node];
        EvalTree::Node n;
        if (bn.kind == BodyNode::Kind::Leaf) {
            n.kind = EvalTree::Node::Kind::Instance;
            n.instance = intern_instance(bn.constraint, leaf);
        } else {
            n.kind = bn.kind == BodyNode::Kind::And ? EvalTree::Node::Kind::And
                                                    : EvalTree::Node::Kind::Or;
            for (uint32_t k : bn.children) n.children.push_back(graft_body(k, leaf));
        }
        ctx.tree.nodes.push_back(std::move(n));
        return static_cast<uint32_t>(ctx.tree.nodes.size() - 1);
    };
    std::function<uint32_t(uint32_t)> graft_exp = [&](uint32_t exp_node) -> uint32_t {
        const Expansion::Node& en = ctx.expansion.nodes[exp_node];
        if (en.kind == Expansion::Node::Kind::Leaf) return graft_body(ctx.spec.body_root, en.leaf);
        EvalTree::Node n;
        n.kind = en.kind == Expansion::Node::Kind::And ? EvalTree::Node::Kind::And
                                                       : EvalTree::Node::Kind::Or;
        for (uint32_t k : en.children) n.children.push_back(graft_exp(k));
        ctx.tree.nodes.push_back(std::move(n));
        return static_cast<uint32_t>(ctx.tree.nodes.size() - 1);
    };
    ctx.tree.root = graft_exp(ctx.expansion.root);
    return ctx;
}

// --- induced chains ---------------------------------------------------------------

namespace {

/// Chain of the self-composition induced by per-agent row selections; labels
/// live in the flattened `ap@k` namespace.
struct InducedChain {
    Mdp chain;
    uint32_t m = 0;
    std::vector<StateId> locals;  // m per chain state
    std::vector<uint32_t> rows;   // m per chain state (selected row of the agent model)
    std::map<std::vector<StateId>, uint32_t> index;
    std::vector<uint32_t> leaf_initial;  // chain state per expansion leaf
};

InducedChain build_induced_chain(const Mdp& agent, const std::vector<Bindings>& leaves,
                                 const std::function<uint32_t(uint32_t, StateId)>& row_of) {
    const uint32_t m = leaves.front().agent_count;
    if (size_t{agent.num_aps()} * m > kMaxAtomicPropositions)
        throw SynthesisError("chain label space exceeds the 64-proposition limit");
    InducedChain ic;
    ic.m = m;
    for (uint32_t i = 0; i < m; ++i)
        for (const auto& ap : agent.ap_names)
            ic.chain.ap_names.push_back(ap + "@" + std::to_string(i + 1));
    ic.chain.action_names = {"step"};

    std::vector<std::vector<StateId>> worklist;
    auto intern = [&](const std::vector<StateId>& tuple) {
        auto it = ic.index.find(tuple);
        if (it != ic.index.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(ic.index.size());
        ic.index.emplace(tuple, id);
        worklist.push_back(tuple);
        return id;
    };
    for (const Bindings& b : leaves) {
        std::vector<StateId> tuple(b.initial_state_of_agent.begin(), b.initial_state_of_agent.end());
        ic.leaf_initial.push_back(intern(tuple));
    }

    for (uint32_t done = 0; done < worklist.size(); ++done) {
        const std::vector<StateId> tuple = worklist[done];
        uint64_t label = 0;
        for (uint32_t i = 0; i < m; ++i) {
            ic.locals.push_back(tuple[i]);
            label |= agent.labels[tuple[i]] << (i * agent.num_aps());
        }
        ic.chain.labels.push_back(label);
        ic.chain.enabled.push_back({0});
        std::vector<uint32_t> rows(m);
        for (uint32_t i = 0; i < m; ++i) {
            rows[i] = row_of(i, tuple[i]);
            ic.rows.push_back(rows[i]);
        }
        std::vector<std::pair<std::vector<StateId>, double>> partial{{{}, 1.0}};
        for (uint32_t i = 0; i < m; ++i) {
            const Distribution& d = agent.rows[tuple[i]][rows[i]];
            std::vector<std::pair<std::vector<StateId>, double>> next;
            next.reserve(partial.size() * d.support.size());
            for (auto& [pfx, prob] : partial)
                for (const auto& e : d.support) {
                    auto t2 = pfx;
                    t2.push_back(e.target);
                    next.emplace_back(std::move(t2), prob * e.prob);
                }
            partial = std::move(next);
        }
        Distribution dist;
        for (auto& [succ, prob] : partial) dist.support.push_back({intern(succ), prob});
        dist.normalize_layout();
        ic.chain.rows.push_back({std::move(dist)});
    }
    ic.chain.num_states = static_cast<uint32_t>(worklist.size());
    return ic;
}

bool eval_prop_on_labels(const LtlPtr& f, const Mdp& agent, const StateId* locals) {
    switch (f->op) {
        case LtlOp::True: return true;
        case LtlOp::False: return false;
        case LtlOp::Atom: {
            uint32_t ap = agent.ap_id(f->ap);
            if (ap >= kMaxAtomicPropositions) return false;
            return (agent.labels[locals[f->agent]] >> ap) & 1;
        }
        case LtlOp::Not: return !eval_prop_on_labels(f->lhs, agent, locals);
        case LtlOp::And:
            return eval_prop_on_labels(f->lhs, agent, locals) && eval_prop_on_labels(f->rhs, agent, locals);
        case LtlOp::Or:
            return eval_prop_on_labels(f->lhs, agent, locals) || eval_prop_on_labels(f->rhs, agent, locals);
        case LtlOp::Xor:
            return eval_prop_on_labels(f->lhs, agent, locals) != eval_prop_on_labels(f->rhs, agent, locals);
        case LtlOp::Implies:
            return !eval_prop_on_labels(f->lhs, agent, locals) || eval_prop_on_labels(f->rhs, agent, locals);
        default: throw SynthesisError("temporal operator in a goal-event formula");
    }
}

Evaluation evaluate_chain(const EvalContext& ctx, const InducedChain& ic) {
    Evaluation ev;
    ev.instance_values.resize(ctx.instances.size());
    for (size_t ii = 0; ii < ctx.instances.size(); ++ii) {
        const Instance& inst = ctx.instances[ii];
        const ProbConstraint& c = ctx.spec.constraints[inst.constraint];
        uint32_t init = ic.leaf_initial[inst.leaf];
        if (c.kind == ProbConstraint::Kind::RewardOptimize) {
            std::vector<double> state_reward(ic.chain.num_states, 0.0);
            int charged = ctx.reward_agent_index[inst.constraint];
            for (uint32_t s = 0; s < ic.chain.num_states; ++s)
                for (uint32_t i = 0; i < ic.m; ++i) {
                    if (charged >= 0 && static_cast<int>(i) != charged) continue;
                    StateId local = ic.locals[size_t{s} * ic.m + i];
                    state_reward[s] += ctx.work.rewards->values[local][ic.rows[size_t{s} * ic.m + i]];
                }
            Bits goal(ic.chain.num_states);
            for (uint32_t s = 0; s < ic.chain.num_states; ++s)
                if (eval_prop_on_labels(c.body, ctx.work, &ic.locals[size_t{s} * ic.m])) {
                    goal.set(s);
                    state_reward[s] = 0.0;
                }
            ev.instance_values[ii] = mc_total_reward(ic.chain, state_reward, goal, true)[init];
        } else {
            ev.instance_values[ii] =
                mc_satisfaction_probability(ic.chain, ctx.dras[inst.constraint], init, ic.m);
        }
    }

    // combine through the tree
    std::function<bool(uint32_t)> holds = [&](uint32_t n) -> bool {
        const EvalTree::Node& node = ctx.tree.nodes[n];
        switch (node.kind) {
            case EvalTree::Node::Kind::Instance: {
                const Instance& inst = ctx.instances[node.instance];
                const ProbConstraint& c = ctx.spec.constraints[inst.constraint];
                if (c.kind != ProbConstraint::Kind::Threshold) return true;
                return cmp_holds(ev.instance_values[node.instance], c.cmp, c.bound);
            }
            case EvalTree::Node::Kind::And:
                for (uint32_t k : node.children)
                    if (!holds(k)) return false;
                return true;
            case EvalTree::Node::Kind::Or:
                for (uint32_t k : node.children)
                    if (holds(k)) return true;
                return false;
        }
        return false;
    };
    ev.satisfied = holds(ctx.tree.root);
    for (size_t ii = 0; ii < ctx.instances.size(); ++ii)
        if (ctx.spec.constraints[ctx.instances[ii].constraint].kind != ProbConstraint::Kind::Threshold)
            ev.objective = ev.instance_values[ii];
    return ev;
}

}  // namespace

Evaluation evaluate_policy_tuple(const EvalContext& ctx, const PolicyTuple& t) {
    InducedChain ic = build_induced_chain(
        ctx.work, ctx.expansion.leaves, [&](uint32_t agent, StateId s) -> uint32_t {
            uint32_t var = ctx.expansion.leaves.front().policy_var_of_agent[agent];
            ActionId a = t.choice[var][s];
            int k = ctx.work.enabled_index(s, a);
            if (k < 0) throw SynthesisError("policy tuple picks a disabled action");
            return static_cast<uint32_t>(k);
        });
    return evaluate_chain(ctx, ic);
}

Evaluation evaluate_uniform_random(const EvalContext& ctx) {
    EvalContext unif = ctx;
    unif.work = uniform_chain(ctx.work);
    InducedChain ic = build_induced_chain(unif.work, unif.expansion.leaves,
                                          [](uint32_t, StateId) -> uint32_t { return 0; });
    return evaluate_chain(unif, ic);
}

PolicyTuple lowest_tuple(const EvalContext& ctx, const ActionRestriction& r) {
    PolicyTuple t;
    t.choice.assign(ctx.num_policy_vars(), std::vector<ActionId>(ctx.work.num_states, kNoAction));
    for (uint32_t var = 0; var < ctx.num_policy_vars(); ++var)
        for (StateId s = 0; s < ctx.work.num_states; ++s) {
            uint64_t mask = r.mask(var, s);
            t.choice[var][s] = mask ? static_cast<ActionId>(__builtin_ctzll(mask))
                                    : ctx.work.enabled[s].front();
        }
    return t;
}

// --- synthesis engine --------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

struct Engine {
    const EvalContext& ctx;
    const SynthesisOptions& opts;
    std::vector<ProductMdp> products;  // per constraint
    bool optimizing = false;
    bool maximize = true;  // objective direction when optimizing
    const ProbConstraint* objective = nullptr;
    uint32_t objective_instance = 0;

    // per-constraint row rewards and goal sets (reward objectives)
    std::vector<double> row_rewards;
    Bits reward_goal;

    Clock::time_point start;
    double deadline_s;

    std::mutex mu;
    std::condition_variable cv;
    struct Node {
        ActionRestriction restriction;
        std::string path;
    };
    std::vector<Node> stack;
    uint32_t active = 0;
    bool stop = false;

    // incumbent
    bool has_tuple = false;
    PolicyTuple best;
    double best_value = 0.0;
    std::vector<double> best_instance_values;
    bool satisfied_found = false;

    SynthesisStats stats;
    std::string trace;
    std::string csv = "time_s,value\n";

    Engine(const EvalContext& c, const SynthesisOptions& o) : ctx(c), opts(o) {
        start = Clock::now();
        deadline_s = opts.time_budget_s;
        optimizing = has_optimization(ctx.spec);
        if (optimizing) {
            for (size_t i = 0; i < ctx.instances.size(); ++i)
                if (ctx.spec.constraints[ctx.instances[i].constraint].kind !=
                    ProbConstraint::Kind::Threshold) {
                    objective = &ctx.spec.constraints[ctx.instances[i].constraint];
                    objective_instance = static_cast<uint32_t>(i);
                }
            maximize = objective->maximize;
            best_value = maximize ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();
            if (!std::isnan(opts.initial_threshold)) best_value = opts.initial_threshold;
        }
        for (size_t c2 = 0; c2 < ctx.spec.constraints.size(); ++c2)
            products.push_back(sync_product(ctx.work, ctx.dras[c2], ctx.expansion.leaves,
                                            opts.product_limits));
        for (const auto& p : products) stats.product_states = std::max<uint64_t>(stats.product_states, p.num_states);

        if (optimizing && objective->kind == ProbConstraint::Kind::RewardOptimize) {
            const ProductMdp& p = products[ctx.instances[objective_instance].constraint];
            int charged = ctx.reward_agent_index[ctx.instances[objective_instance].constraint];
            row_rewards.resize(p.row_entry_begin.size() - 1, 0.0);
            for (uint32_t s = 0; s < p.num_states; ++s)
                for (uint32_t k = 0; k < p.num_rows(s); ++k) {
                    uint32_t rowi = p.row_index(s, k);
                    const ActionId* acts = p.actions_of_row(rowi);
                    double r = 0.0;
                    for (uint32_t i = 0; i < p.m; ++i) {
                        if (charged >= 0 && static_cast<int>(i) != charged) continue;
                        StateId local = p.local(s, i);
                        r += ctx.work.rewards->values[local][ctx.work.enabled_index(local, acts[i])];
                    }
                    row_rewards[rowi] = r;
                }
            reward_goal = Bits(p.num_states);
            std::vector<StateId> locals(p.m);
            for (uint32_t s = 0; s < p.num_states; ++s) {
                for (uint32_t i = 0; i < p.m; ++i) locals[i] = p.local(s, i);
                if (eval_prop_on_labels(objective->body, ctx.work, locals.data())) reward_goal.set(s);
            }
        }
    }

    double elapsed_s() const {
        return std::chrono::duration<double>(Clock::now() - start).count();
    }
    bool out_of_time() const { return elapsed_s() >= deadline_s; }

    bool better(double a, double b) const {  // strict improvement in objective direction
        return maximize ? a > b : a < b;
    }

    void log(const std::string& line) {
        if (!opts.trace_path.empty()) trace += line + "\n";
    }

    // exact evaluation + incumbent update; returns the evaluation
    Evaluation consider_tuple(const PolicyTuple& t) {
        Evaluation ev = evaluate_policy_tuple(ctx, t);
        std::lock_guard<std::mutex> lk(mu);
        bool improved = false;
        if (optimizing) {
            // with a reference threshold only strictly better tuples count
            improved = better(ev.objective, best_value) ||
                       (!has_tuple && std::isnan(opts.initial_threshold));
            if (improved) {
                best = t;
                best_value = ev.objective;
                best_instance_values = ev.instance_values;
                has_tuple = true;
            }
        } else if (ev.satisfied && !satisfied_found) {
            satisfied_found = true;
            best = t;
            best_instance_values = ev.instance_values;
            best_value = ev.instance_values.empty() ? 1.0 : ev.instance_values.front();
            has_tuple = true;
            improved = true;
            stop = true;
        }
        if (improved) {
            stats.time_to_best_s = elapsed_s();
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.3f,%s\n", stats.time_to_best_s,
                          fmt_value(optimizing ? ev.objective : best_value).c_str());
            csv += buf;
        }
        return ev;
    }

    // ---- one node of the optimize loop ----
    void analyze_optimize(const Node& node) {
        const ProductMdp& p = products[ctx.instances[objective_instance].constraint];
        const ActionRestriction& r = node.restriction;
        RestrictedProduct rp{&p, &r};
        uint32_t init = p.initials[ctx.instances[objective_instance].leaf];

        double bound;
        ProductPolicy rows;
        if (objective->kind == ProbConstraint::Kind::RewardOptimize) {
            ProductView view(rp);
            std::vector<uint32_t> choice;
            auto vals = expected_total_reward_view(
                view, [&](uint32_t s, uint32_t k) { return row_rewards[p.row_index(s, k)]; },
                reward_goal, true, maximize, opts.epsilon, &choice);
            bound = vals[init];
            rows = std::move(choice);
        } else {
            RabinResult rr = rabin_optimal_policy(rp, maximize, opts.epsilon);
            bound = rr.values[init];
            rows = std::move(rr.row_choice);
        }

        {
            std::lock_guard<std::mutex> lk(mu);
            ++stats.nodes;
            bool prune = has_tuple || !std::isnan(opts.initial_threshold)
                             ? (maximize ? bound <= best_value + 1e-9 : bound >= best_value - 1e-9)
                             : false;
            if (std::isinf(bound) && ((maximize && bound < 0) || (!maximize && bound > 0))) prune = true;
            if (prune) {
                ++stats.pruned;
                log("node=" + std::to_string(stats.nodes) + " path=" + node.path +
                    " bound=" + fmt_value(bound) + " action=prune");
                return;
            }
        }

        ConsistencyReport report = check_consistency(p, rows);
        if (report.consistent()) {
            PolicyTuple t = factorize(p, rows);
            Evaluation ev = consider_tuple(t);
            std::lock_guard<std::mutex> lk(mu);
            log("node=" + std::to_string(stats.nodes) + " path=" + node.path +
                " bound=" + fmt_value(bound) + " status=consistent value=" +
                fmt_value(optimizing ? ev.objective : 0.0) + " action=accept");
            return;
        }

        PolicyTuple cand = resolve_randomly(p, rows, report, fnv1a(opts.seed, node.path));
        Evaluation ev = consider_tuple(cand);

        std::vector<ActionRestriction> children = split(r, report);
        if (opts.split_observer) {
            SplitEvent event{r, report.conflicts.front(), children};
            opts.split_observer(event);
        }
        const Conflict& c = report.conflicts.front();
        std::lock_guard<std::mutex> lk(mu);
        ++stats.splits;
        log("node=" + std::to_string(stats.nodes) + " path=" + node.path + " bound=" +
            fmt_value(bound) + " status=conflict hole=v" + std::to_string(c.var) + ".s" +
            std::to_string(c.local) + " a=" + ctx.work.action_names[c.action_a] + " b=" +
            ctx.work.action_names[c.action_b] + " candidate=" + fmt_value(ev.objective) +
            " action=split");
        for (size_t i = children.size(); i-- > 0;)
            stack.push_back({std::move(children[i]), node.path + "." + std::to_string(i)});
        cv.notify_all();
    }

    // ---- one node of the threshold loop ----
    void analyze_threshold(const Node& node) {
        const ActionRestriction& r = node.restriction;
        std::vector<ConstraintClass> cls(ctx.instances.size());
        std::vector<RabinResult> maxres(ctx.instances.size()), minres(ctx.instances.size());
        for (size_t i = 0; i < ctx.instances.size(); ++i) {
            const Instance& inst = ctx.instances[i];
            const ProductMdp& p = products[inst.constraint];
            RestrictedProduct rp{&p, &r};
            cls[i] = classify_constraint(rp, ctx.spec.constraints[inst.constraint],
                                         p.initials[inst.leaf], opts.epsilon, &maxres[i], &minres[i]);
        }
        std::function<ConstraintClass(uint32_t)> combine = [&](uint32_t n) -> ConstraintClass {
            const EvalTree::Node& tn = ctx.tree.nodes[n];
            if (tn.kind == EvalTree::Node::Kind::Instance) return cls[tn.instance];
            bool any_amb = false;
            if (tn.kind == EvalTree::Node::Kind::And) {
                for (uint32_t k : tn.children) {
                    ConstraintClass c = combine(k);
                    if (c == ConstraintClass::Unsat) return ConstraintClass::Unsat;
                    any_amb = any_amb || c == ConstraintClass::Ambiguous;
                }
                return any_amb ? ConstraintClass::Ambiguous : ConstraintClass::Sat;
            }
            for (uint32_t k : tn.children) {
                ConstraintClass c = combine(k);
                if (c == ConstraintClass::Sat) return ConstraintClass::Sat;
                any_amb = any_amb || c == ConstraintClass::Ambiguous;
            }
            return any_amb ? ConstraintClass::Ambiguous : ConstraintClass::Unsat;
        };
        ConstraintClass verdict = combine(ctx.tree.root);

        {
            std::lock_guard<std::mutex> lk(mu);
            ++stats.nodes;
        }
        const char* vtext = verdict == ConstraintClass::Sat
                                ? "sat"
                                : verdict == ConstraintClass::Unsat ? "unsat" : "ambiguous";

        if (verdict == ConstraintClass::Unsat) {
            std::lock_guard<std::mutex> lk(mu);
            ++stats.pruned;
            log("node=" + std::to_string(stats.nodes) + " path=" + node.path +
                " status=unsat action=discard");
            return;
        }
        if (verdict == ConstraintClass::Sat) {
            Evaluation ev = consider_tuple(lowest_tuple(ctx, r));
            std::lock_guard<std::mutex> lk(mu);
            log("node=" + std::to_string(stats.nodes) + " path=" + node.path +
                " status=sat action=accept");
            if (ev.satisfied) return;
            // numeric boundary: fall through to ambiguous handling below
        }

        // optimistic candidate from the first ambiguous instance
        for (size_t i = 0; i < ctx.instances.size(); ++i) {
            if (cls[i] != ConstraintClass::Ambiguous) continue;
            const Instance& inst = ctx.instances[i];
            const ProbConstraint& c = ctx.spec.constraints[inst.constraint];
            const ProductMdp& p = products[inst.constraint];
            bool want_max = c.cmp == Cmp::Ge || c.cmp == Cmp::Gt;
            const ProductPolicy& rows = want_max ? maxres[i].row_choice : minres[i].row_choice;
            ConsistencyReport rep = check_consistency(p, rows);
            PolicyTuple cand = rep.consistent()
                                   ? factorize(p, rows)
                                   : resolve_randomly(p, rows, rep, fnv1a(opts.seed, node.path));
            Evaluation ev = consider_tuple(cand);
            if (ev.satisfied) {
                std::lock_guard<std::mutex> lk(mu);
                log("node=" + std::to_string(stats.nodes) + " path=" + node.path +
                    " status=" + vtext + " action=witness");
                return;
            }
            break;
        }

        // split on the first inconsistency among the analyzed policies
        for (size_t i = 0; i < ctx.instances.size(); ++i) {
            if (cls[i] != ConstraintClass::Ambiguous) continue;
            const ProductMdp& p = products[ctx.instances[i].constraint];
            for (const ProductPolicy* rows : {&maxres[i].row_choice, &minres[i].row_choice}) {
                ConsistencyReport rep = check_consistency(p, *rows);
                if (rep.consistent()) continue;
                std::vector<ActionRestriction> children = split(r, rep);
                if (opts.split_observer) opts.split_observer({r, rep.conflicts.front(), children});
                std::lock_guard<std::mutex> lk(mu);
                ++stats.splits;
                log("node=" + std::to_string(stats.nodes) + " path=" + node.path + " status=" +
                    vtext + " action=split");
                for (size_t k = children.size(); k-- > 0;)
                    stack.push_back({std::move(children[k]), node.path + "." + std::to_string(k)});
                cv.notify_all();
                return;
            }
        }

        // all analyzed policies consistent: bisect the first reachable
        // undecided hole; a fully decided node was settled by its unique tuple
        for (uint32_t var = 0; var < ctx.num_policy_vars(); ++var)
            for (StateId s = 0; s < ctx.work.num_states; ++s) {
                uint64_t mask = r.mask(var, s);
                if (__builtin_popcountll(mask) < 2) continue;
                ActionRestriction left = r, right = r;
                left.mask(var, s) = mask & (~mask + 1);  // lowest bit
                right.mask(var, s) = mask & (mask - 1);
                std::lock_guard<std::mutex> lk(mu);
                ++stats.splits;
                log("node=" + std::to_string(stats.nodes) + " path=" + node.path + " status=" +
                    vtext + " action=bisect hole=v" + std::to_string(var) + ".s" + std::to_string(s));
                stack.push_back({std::move(right), node.path + ".1"});
                stack.push_back({std::move(left), node.path + ".0"});
                cv.notify_all();
                return;
            }
        std::lock_guard<std::mutex> lk(mu);
        log("node=" + std::to_string(stats.nodes) + " path=" + node.path + " status=" + vtext +
            " action=exhausted");
    }

    void worker() {
        std::unique_lock<std::mutex> lk(mu);
        while (true) {
            cv.wait(lk, [&] { return stop || !stack.empty() || active == 0; });
            if (stop || (stack.empty() && active == 0)) return;
            if (stack.empty()) continue;
            Node node = std::move(stack.back());
            stack.pop_back();
            ++active;
            lk.unlock();
            bool timed_out = out_of_time();
            if (!timed_out) {
                if (optimizing)
                    analyze_optimize(node);
                else
                    analyze_threshold(node);
            }
            lk.lock();
            --active;
            if (timed_out) stop = true;
            if (stack.empty() && active == 0) cv.notify_all();
        }
    }

    SynthesisResult run() {
        stack.push_back({ActionRestriction::full(ctx.work, ctx.num_policy_vars()), "r"});
        if (opts.workers <= 1) {
            while (!stack.empty() && !stop) {
                Node node = std::move(stack.back());
                stack.pop_back();
                if (out_of_time()) {
                    stop = true;
                    break;
                }
                if (optimizing)
                    analyze_optimize(node);
                else
                    analyze_threshold(node);
            }
        } else {
            std::vector<std::thread> pool;
            for (uint32_t i = 0; i < opts.workers; ++i) pool.emplace_back([this] { worker(); });
            for (auto& t : pool) t.join();
        }

        SynthesisResult res;
        res.maximize = maximize;
        res.has_tuple = has_tuple;
        res.best = best;
        res.best_value = best_value;
        res.instance_values = best_instance_values;
        res.stats = stats;
        res.stats.total_time_s = elapsed_s();
        bool exhausted = stack.empty() && !stop;
        if (!optimizing && satisfied_found) {
            res.status = SynthesisStatus::ThresholdSatisfied;
        } else if (stop && out_of_time()) {
            res.status = SynthesisStatus::BudgetExhausted;
        } else if (optimizing) {
            res.status = has_tuple || !std::isnan(opts.initial_threshold)
                             ? SynthesisStatus::OptimumFound
                             : SynthesisStatus::Infeasible;
        } else {
            res.status = SynthesisStatus::Infeasible;
        }
        (void)exhausted;

        if (!opts.trace_path.empty()) {
            std::ofstream out(opts.trace_path);
            out << trace;
        }
        if (!opts.csv_path.empty()) {
            std::ofstream out(opts.csv_path);
            out << csv;
        }
        return res;
    }
};

}  // namespace

SynthesisResult synthesize(const Mdp& model, const HyperFormula& spec, const SynthesisOptions& opts) {
    EvalContext ctx = make_eval_context(model, spec, opts.memory_bits, opts.override_dra,
                                        opts.automata_limits);
    Engine engine(ctx, opts);
    SynthesisResult res = engine.run();

    // root upper bound for reporting (unrestricted abstraction)
    ActionRestriction full = ActionRestriction::full(ctx.work, ctx.num_policy_vars());
    if (has_optimization(spec)) {
        const Instance& inst = ctx.instances[engine.objective_instance];
        const ProductMdp& p = engine.products[inst.constraint];
        RestrictedProduct rp{&p, &full};
        if (engine.objective->kind == ProbConstraint::Kind::RewardOptimize) {
            ProductView view(rp);
            auto vals = expected_total_reward_view(
                view, [&](uint32_t s, uint32_t k) { return engine.row_rewards[p.row_index(s, k)]; },
                engine.reward_goal, true, engine.maximize, opts.epsilon);
            res.upper_bound = vals[p.initials[inst.leaf]];
        } else {
            res.upper_bound =
                rabin_optimal_policy(rp, engine.maximize, opts.epsilon).values[p.initials[inst.leaf]];
        }
    }
    return res;
}

SynthesisResult oracle_enumerate(const Mdp& model, const HyperFormula& spec,
                                 const SynthesisOptions& opts) {
    EvalContext ctx = make_eval_context(model, spec, opts.memory_bits, opts.override_dra,
                                        opts.automata_limits);
    const uint32_t nvars = ctx.num_policy_vars();
    auto t0 = Clock::now();

    // holes over component-reachable local states only
    Bits reachable(ctx.work.num_states);
    {
        std::vector<uint32_t> work;
        for (const Bindings& b : ctx.expansion.leaves)
            for (StateId s : b.initial_state_of_agent)
                if (!reachable.test(s)) {
                    reachable.set(s);
                    work.push_back(s);
                }
        while (!work.empty()) {
            StateId s = work.back();
            work.pop_back();
            for (const auto& row : ctx.work.rows[s])
                for (const auto& e : row.support)
                    if (!reachable.test(e.target)) {
                        reachable.set(e.target);
                        work.push_back(e.target);
                    }
        }
    }
    std::vector<std::pair<uint32_t, StateId>> holes;
    uint64_t total = 1;
    for (uint32_t var = 0; var < nvars; ++var)
        reachable.for_each([&](size_t s) {
            if (ctx.work.enabled[s].size() > 1) {
                holes.emplace_back(var, static_cast<StateId>(s));
                total *= ctx.work.enabled[s].size();
                if (total > opts.oracle_cap)
                    throw SynthesisError("oracle enumeration exceeds the tuple cap");
            }
        });

    PolicyTuple t;
    t.choice.assign(nvars, {});
    for (uint32_t var = 0; var < nvars; ++var) {
        t.choice[var].resize(ctx.work.num_states);
        for (StateId s = 0; s < ctx.work.num_states; ++s) t.choice[var][s] = ctx.work.enabled[s].front();
    }

    SynthesisResult res;
    res.maximize = true;
    bool optimizing = has_optimization(spec);
    if (optimizing)
        for (const auto& c : ctx.spec.constraints)
            if (c.kind != ProbConstraint::Kind::Threshold) res.maximize = c.maximize;
    res.best_value = res.maximize ? -std::numeric_limits<double>::infinity()
                                  : std::numeric_limits<double>::infinity();

    std::vector<size_t> idx(holes.size(), 0);
    while (true) {
        for (size_t h = 0; h < holes.size(); ++h)
            t.choice[holes[h].first][holes[h].second] = ctx.work.enabled[holes[h].second][idx[h]];
        Evaluation ev = evaluate_policy_tuple(ctx, t);
        ++res.stats.nodes;
        if (optimizing) {
            if (!res.has_tuple || (res.maximize ? ev.objective > res.best_value
                                                : ev.objective < res.best_value)) {
                res.best_value = ev.objective;
                res.best = t;
                res.has_tuple = true;
                res.instance_values = ev.instance_values;
            }
        } else if (ev.satisfied) {
            res.best = t;
            res.has_tuple = true;
            res.instance_values = ev.instance_values;
            res.best_value = ev.instance_values.empty() ? 1.0 : ev.instance_values.front();
            res.status = SynthesisStatus::ThresholdSatisfied;
            res.stats.total_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
            return res;
        }
        size_t h = holes.size();
        bool more = false;
        while (h-- > 0) {
            if (++idx[h] < ctx.work.enabled[holes[h].second].size()) {
                more = true;
                break;
            }
            idx[h] = 0;
        }
        if (!more) break;
    }
    res.status = optimizing ? SynthesisStatus::OptimumFound : SynthesisStatus::Infeasible;
    res.stats.total_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
    return res;
}

// --- policy tuple files --------------------------------------------------------------

std::string format_policy_tuple(const EvalContext& ctx, const PolicyTuple& t) {
    std::ostringstream out;
    const uint32_t mem = uint32_t{1} << ctx.memory_bits;
    for (uint32_t var = 0; var < t.choice.size(); ++var) {
        out << "policy " << ctx.spec.policy_vars[var] << " mem=" << ctx.memory_bits << "\n";
        for (StateId s = 0; s < ctx.work.num_states; ++s) {
            ActionId a = t.choice[var][s];
            if (a == kNoAction) continue;
            if (ctx.memory_bits == 0) {
                out << s << ' ' << ctx.work.action_names[a] << "\n";
            } else {
                StateId orig = s / mem;
                uint32_t mbits = s % mem;
                ActionId base = a / mem;
                uint32_t next = a % mem;
                out << orig << ':' << mbits << ' ' << ctx.original.action_names[base] << ' ' << next
                    << "\n";
            }
        }
    }
    return out.str();
}

PolicyTuple parse_policy_tuple(const EvalContext& ctx, const std::string& text) {
    PolicyTuple t;
    t.choice.assign(ctx.num_policy_vars(), std::vector<ActionId>(ctx.work.num_states, kNoAction));
    const uint32_t mem = uint32_t{1} << ctx.memory_bits;
    std::istringstream in(text);
    std::string line;
    int var = -1;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue;
        if (tok == "policy") {
            std::string name;
            ls >> name;
            var = ctx.spec.policy_var_index(name);
            if (var < 0) throw SynthesisError("unknown policy variable '" + name + "' in policy file");
            continue;
        }
        if (var < 0) throw SynthesisError("policy file: assignment before a 'policy' header");
        std::string action;
        if (!(ls >> action)) throw SynthesisError("policy file line " + std::to_string(line_no) + ": missing action");
        StateId local;
        if (ctx.memory_bits == 0) {
            local = static_cast<StateId>(std::stoul(tok));
            ActionId a = ctx.work.action_id(action);
            if (a == kNoAction) throw SynthesisError("unknown action '" + action + "'");
            if (local >= ctx.work.num_states) throw SynthesisError("state out of range in policy file");
            t.choice[var][local] = a;
        } else {
            size_t colon = tok.find(':');
            if (colon == std::string::npos)
                throw SynthesisError("policy file line " + std::to_string(line_no) +
                                     ": expected state:mem");
            StateId orig = static_cast<StateId>(std::stoul(tok.substr(0, colon)));
            uint32_t mbits = static_cast<uint32_t>(std::stoul(tok.substr(colon + 1)));
            uint32_t next;
            if (!(ls >> next)) throw SynthesisError("policy file line " + std::to_string(line_no) +
                                                    ": missing memory update");
            ActionId base = ctx.original.action_id(action);
            if (base == kNoAction) throw SynthesisError("unknown action '" + action + "'");
            if (mbits >= mem || next >= mem) throw SynthesisError("memory value out of range");
            local = unfolded_state(orig, mbits, ctx.memory_bits);
            if (local >= ctx.work.num_states) throw SynthesisError("state out of range in policy file");
            t.choice[var][local] = base * mem + next;
        }
    }
    // unassigned states default to the lowest enabled action
    for (uint32_t v = 0; v < t.choice.size(); ++v)
        for (StateId s = 0; s < ctx.work.num_states; ++s)
            if (t.choice[v][s] == kNoAction) t.choice[v][s] = ctx.work.enabled[s].front();
    return t;
}

}  // namespace hypersynth
