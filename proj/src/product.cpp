#include "product.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <unordered_map>

namespace hypersynth {

ProductLimits ProductLimits::from_env() {
    ProductLimits lim;
    if (const char* env = std::getenv("HYPERSYNTH_STATE_BUDGET")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0' && v > 0) lim.max_states = v;
    }
    return lim;
}

ActionRestriction ActionRestriction::full(const Mdp& agent, uint32_t num_vars) {
    if (agent.num_actions() > 64)
        throw ProductError("action restrictions require at most 64 global actions");
    ActionRestriction r;
    r.num_vars = num_vars;
    r.num_locals = agent.num_states;
    r.allowed.resize(size_t{num_vars} * agent.num_states, 0);
    for (StateId s = 0; s < agent.num_states; ++s) {
        uint64_t mask = 0;
        for (ActionId a : agent.enabled[s]) mask |= uint64_t{1} << a;
        for (uint32_t v = 0; v < num_vars; ++v) r.allowed[v * r.num_locals + s] = mask;
    }
    return r;
}

ActionRestriction ActionRestriction::intersect(const ActionRestriction& other) const {
    if (num_vars != other.num_vars || num_locals != other.num_locals)
        throw ProductError("restriction shape mismatch");
    ActionRestriction out = *this;
    for (size_t i = 0; i < allowed.size(); ++i) out.allowed[i] &= other.allowed[i];
    return out;
}

int ProductMdp::find_row(uint32_t s, const std::vector<ActionId>& actions) const {
    // rows are lexicographic over per-agent enabled indices
    uint32_t index = 0;
    for (uint32_t i = 0; i < m; ++i) {
        const auto& en = agent.enabled[local(s, i)];
        int k = agent.enabled_index(local(s, i), actions[i]);
        if (k < 0) return -1;
        index = index * static_cast<uint32_t>(en.size()) + static_cast<uint32_t>(k);
    }
    return static_cast<int>(index);
}

std::vector<uint64_t> ProductMdp::label_tuple(uint32_t s) const {
    std::vector<uint64_t> out(m);
    for (uint32_t i = 0; i < m; ++i) out[i] = agent.labels[local(s, i)];
    return out;
}

RestrictedProduct apply_restriction(const ProductMdp& p, const ActionRestriction& r) {
    if (r.num_vars != p.bindings.num_policy_vars || r.num_locals != p.agent.num_states)
        throw ProductError("restriction does not match the product's hole space");
    for (uint32_t v = 0; v < r.num_vars; ++v)
        for (StateId s = 0; s < p.agent.num_states; ++s) {
            uint64_t enabled = 0;
            for (ActionId a : p.agent.enabled[s]) enabled |= uint64_t{1} << a;
            uint64_t mask = r.mask(v, s);
            if ((mask & enabled) == 0)
                throw ProductError("restriction empties the enabled set at hole (var " +
                                   std::to_string(v) + ", state " + std::to_string(s) + ")");
            if (mask & ~enabled)
                throw ProductError("restriction allows a disabled action at hole (var " +
                                   std::to_string(v) + ", state " + std::to_string(s) + ")");
        }
    return RestrictedProduct{&p, &r};
}

Mdp self_compose(const Mdp& m, uint32_t count, const ProductLimits& limits) {
    if (count < 1) throw ProductError("self-composition needs at least one replica");
    uint64_t n = 1;
    for (uint32_t i = 0; i < count; ++i) {
        n *= m.num_states;
        if (n > limits.max_states)
            throw ProductError("self-composition exceeds the state budget");
    }
    if (m.num_aps() * count > kMaxAtomicPropositions)
        throw ProductError("self-composition exceeds the proposition limit");

    Mdp out;
    out.num_states = static_cast<uint32_t>(n);
    // joint actions named a1,a2,...  (tuple alphabet)
    uint64_t num_joint = 1;
    for (uint32_t i = 0; i < count; ++i) num_joint *= m.num_actions();
    if (num_joint > 4096) throw ProductError("joint action alphabet too large");
    out.action_names.resize(num_joint);
    for (uint64_t j = 0; j < num_joint; ++j) {
        uint64_t rest = j;
        std::string name;
        std::vector<std::string> parts(count);
        for (uint32_t i = count; i-- > 0;) {
            parts[i] = m.action_names[rest % m.num_actions()];
            rest /= m.num_actions();
        }
        for (uint32_t i = 0; i < count; ++i) name += (i ? "," : "") + parts[i];
        out.action_names[j] = name;
    }
    for (uint32_t i = 0; i < count; ++i)
        for (const auto& ap : m.ap_names) out.ap_names.push_back(ap + "@" + std::to_string(i + 1));

    auto decode = [&](uint64_t id, uint32_t i) {  // component i of tuple state id
        for (uint32_t k = count - 1; k > i; --k) id /= m.num_states;
        return static_cast<StateId>(id % m.num_states);
    };

    out.enabled.resize(out.num_states);
    out.rows.resize(out.num_states);
    out.labels.assign(out.num_states, 0);
    for (uint64_t s = 0; s < n; ++s) {
        for (uint32_t i = 0; i < count; ++i) {
            uint64_t lab = m.labels[decode(s, i)];
            out.labels[s] |= lab << (i * m.num_aps());
        }
        // enumerate joint actions over per-component enabled sets
        std::vector<StateId> locals(count);
        for (uint32_t i = 0; i < count; ++i) locals[i] = decode(s, i);
        std::vector<size_t> idx(count, 0);
        bool more = true;
        while (more) {
            uint64_t joint = 0;
            for (uint32_t i = 0; i < count; ++i)
                joint = joint * m.num_actions() + m.enabled[locals[i]][idx[i]];
            // tensor the component distributions
            Distribution dist;
            dist.support.push_back({0, 1.0});
            std::vector<TransitionEntry> next;
            for (uint32_t i = 0; i < count; ++i) {
                const Distribution& di = m.rows[locals[i]][idx[i]];
                next.clear();
                for (const auto& acc : dist.support)
                    for (const auto& e : di.support)
                        next.push_back({static_cast<StateId>(acc.target * m.num_states + e.target),
                                        acc.prob * e.prob});
                dist.support = next;
            }
            dist.normalize_layout();
            out.enabled[s].push_back(static_cast<ActionId>(joint));
            out.rows[s].push_back(std::move(dist));
            more = false;
            uint32_t i = count;
            while (i-- > 0) {
                if (++idx[i] < m.enabled[locals[i]].size()) {
                    more = true;
                    break;
                }
                idx[i] = 0;
            }
        }
    }
    return out;
}

ProductMdp sync_product(const Mdp& m, Dra dra, const std::vector<Bindings>& leaves,
                        const ProductLimits& limits) {
    if (leaves.empty()) throw ProductError("no bindings to build a product for");
    const uint32_t agents = leaves[0].agent_count;
    if (dra.arity > static_cast<int>(agents))
        throw ProductError("automaton arity exceeds the agent count");

    ProductMdp p;
    p.agent = m;
    p.dra = std::move(dra);
    p.bindings = leaves[0];
    p.m = agents;

    // formula AP -> model AP bit
    std::vector<int> ap_bit(p.dra.ap_names.size(), -1);
    for (size_t i = 0; i < p.dra.ap_names.size(); ++i) {
        uint32_t id = m.ap_id(p.dra.ap_names[i]);
        if (id < kMaxAtomicPropositions) ap_bit[i] = static_cast<int>(id);
    }
    auto valuation_of_state = [&](const StateId* locals) {
        uint64_t v = 0;
        for (size_t i = 0; i < p.dra.atoms.size(); ++i) {
            const TaggedAtom& a = p.dra.atoms[i];
            int bit = ap_bit[a.ap];
            if (bit >= 0 && a.agent < agents && ((m.labels[locals[a.agent]] >> bit) & 1))
                v |= uint64_t{1} << i;
        }
        return v;
    };

    std::unordered_map<uint64_t, std::vector<std::pair<std::vector<StateId>, uint32_t>>> buckets;
    std::vector<uint32_t> worklist;
    auto intern = [&](const std::vector<StateId>& locals, uint32_t q) -> uint32_t {
        uint64_t h = q * 1099511628211ull;
        for (StateId s : locals) h = (h ^ s) * 1099511628211ull;
        auto& bucket = buckets[h];
        for (auto& [ls, idx] : bucket) {
            if (p.state_q[idx] == q && ls == locals) return idx;
        }
        uint32_t id = p.num_states++;
        if (p.num_states > limits.max_states)
            throw ProductError("product state budget exceeded (partial size " +
                               std::to_string(p.num_states) + ")");
        bucket.emplace_back(locals, id);
        for (StateId s : locals) p.state_locals.push_back(s);
        p.state_q.push_back(q);
        worklist.push_back(id);
        return id;
    };

    for (const Bindings& b : leaves) {
        if (b.agent_count != agents) throw ProductError("bindings arity mismatch");
        std::vector<StateId> locals(b.initial_state_of_agent.begin(), b.initial_state_of_agent.end());
        p.initials.push_back(intern(locals, p.dra.initial));
    }

    p.state_row_begin.push_back(0);
    p.row_entry_begin.push_back(0);
    for (uint32_t done = 0; done < p.num_states; ++done) {
        uint32_t s = done;  // worklist order == id order
        std::vector<StateId> locals(agents);
        for (uint32_t i = 0; i < agents; ++i) locals[i] = p.local(s, i);
        uint32_t q_next = p.dra.trans[p.state_q[s]][p.dra.valuation_class[valuation_of_state(locals.data())]];

        std::vector<size_t> idx(agents, 0);
        bool more = true;
        while (more) {
            for (uint32_t i = 0; i < agents; ++i)
                p.row_actions.push_back(m.enabled[locals[i]][idx[i]]);
            // tensor distribution, recursively over agents
            std::vector<std::pair<std::vector<StateId>, double>> partial{{{}, 1.0}};
            for (uint32_t i = 0; i < agents; ++i) {
                const Distribution& di = m.rows[locals[i]][idx[i]];
                std::vector<std::pair<std::vector<StateId>, double>> next;
                next.reserve(partial.size() * di.support.size());
                for (auto& [tuple, prob] : partial)
                    for (const auto& e : di.support) {
                        auto t2 = tuple;
                        t2.push_back(e.target);
                        next.emplace_back(std::move(t2), prob * e.prob);
                    }
                partial = std::move(next);
            }
            for (auto& [tuple, prob] : partial)
                p.entries.push_back({intern(tuple, q_next), prob});
            if (p.entries.size() > limits.max_entries)
                throw ProductError("product transition budget exceeded");
            p.row_entry_begin.push_back(static_cast<uint32_t>(p.entries.size()));
            // advance mixed radix (last agent fastest)
            uint32_t i = agents;
            more = false;
            while (i-- > 0) {
                if (++idx[i] < m.enabled[locals[i]].size()) {
                    more = true;
                    break;
                }
                idx[i] = 0;
            }
        }
        p.state_row_begin.push_back(static_cast<uint32_t>(p.row_entry_begin.size()) - 1);
    }
    return p;
}

std::string unfolded_action_name(const std::string& base, uint32_t next_mem) {
    return base + "." + std::to_string(next_mem);
}

uint32_t unfolded_state(StateId original, uint32_t mem, uint32_t bits) {
    return original * (uint32_t{1} << bits) + mem;
}

Mdp unfold_memory(const Mdp& m, uint32_t bits) {
    if (bits == 0) return m;
    const uint32_t mem = uint32_t{1} << bits;
    Mdp out;
    out.ap_names = m.ap_names;
    out.num_states = m.num_states * mem;
    for (const auto& a : m.action_names)
        for (uint32_t n = 0; n < mem; ++n) out.action_names.push_back(unfolded_action_name(a, n));
    if (out.action_names.size() > 64)
        throw ProductError("memory unfolding exceeds the 64-action alphabet limit");
    out.enabled.resize(out.num_states);
    out.rows.resize(out.num_states);
    out.labels.resize(out.num_states);
    if (m.rewards) {
        out.rewards = RewardStructure{m.rewards->name, {}};
        out.rewards->values.resize(out.num_states);
    }
    for (StateId s = 0; s < m.num_states; ++s) {
        for (uint32_t n = 0; n < mem; ++n) {
            StateId us = unfolded_state(s, n, bits);
            out.labels[us] = m.labels[s];
            for (size_t k = 0; k < m.enabled[s].size(); ++k) {
                for (uint32_t n2 = 0; n2 < mem; ++n2) {
                    out.enabled[us].push_back(m.enabled[s][k] * mem + n2);
                    Distribution d;
                    for (const auto& e : m.rows[s][k].support)
                        d.support.push_back({unfolded_state(e.target, n2, bits), e.prob});
                    d.normalize_layout();
                    out.rows[us].push_back(std::move(d));
                    if (m.rewards) out.rewards->values[us].push_back(m.rewards->values[s][k]);
                }
            }
        }
    }
    return out;
}

}  // namespace hypersynth
