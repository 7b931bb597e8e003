#include "automata.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "bits.hpp"

namespace hypersynth {

uint64_t Dra::valuation_of(const std::vector<uint64_t>& agent_labels) const {
    uint64_t v = 0;
    for (size_t i = 0; i < atoms.size(); ++i) {
        const TaggedAtom& a = atoms[i];
        if (a.agent < agent_labels.size() && ((agent_labels[a.agent] >> a.ap) & 1))
            v |= uint64_t{1} << i;
    }
    return v;
}

namespace {

// --- atom table --------------------------------------------------------------

struct AtomTable {
    std::vector<std::string> ap_names;
    std::vector<TaggedAtom> atoms;
    int arity = 1;

    uint32_t ap_index(const std::string& name) {
        for (uint32_t i = 0; i < ap_names.size(); ++i)
            if (ap_names[i] == name) return i;
        ap_names.push_back(name);
        return static_cast<uint32_t>(ap_names.size() - 1);
    }

    int atom_index(const std::string& ap, int agent) {
        uint32_t api = ap_index(ap);
        TaggedAtom key{api, static_cast<uint32_t>(agent)};
        for (size_t i = 0; i < atoms.size(); ++i)
            if (atoms[i] == key) return static_cast<int>(i);
        atoms.push_back(key);
        return static_cast<int>(atoms.size() - 1);
    }
};

AtomTable collect_atoms(const LtlPtr& f, const AutomataLimits& limits) {
    AtomTable table;
    std::function<void(const LtlPtr&)> walk = [&](const LtlPtr& n) {
        if (!n) return;
        if (n->op == LtlOp::Atom) {
            if (n->agent < 0) throw AutomatonError("unresolved state-variable tag '" + n->tag + "'");
            table.atom_index(n->ap, n->agent);
            table.arity = std::max(table.arity, n->agent + 1);
        }
        walk(n->lhs);
        walk(n->rhs);
    };
    walk(f);
    if (table.atoms.size() > limits.max_atoms)
        throw AutomatonError("formula uses too many tagged atoms (" + std::to_string(table.atoms.size()) +
                             " > " + std::to_string(limits.max_atoms) + ")");
    return table;
}

// --- generalized-Buechi construction over obligation sets --------------------
//
// delta() maps a formula to the moves of a one-step unfolding: each move has a
// letter cube, the obligations to carry to the next position, and the set of
// until-subformulas this move discharges. States of the intermediate automaton
// are obligation sets; one transition-based acceptance set per until.

struct GbaMove {
    Cube cube;
    std::vector<uint32_t> next;  // sorted formula ids
    uint64_t fulfilled = 0;
};

struct GbaBuilder {
    AtomTable& table;
    std::vector<LtlPtr> formulas;
    std::map<std::string, uint32_t> formula_id;
    std::vector<uint32_t> untils;  // formula ids
    std::vector<std::vector<GbaMove>> delta_memo;
    std::vector<char> delta_done;

    explicit GbaBuilder(AtomTable& t) : table(t) {}

    uint32_t intern(const LtlPtr& f) {
        std::string key = print_ltl(f);
        auto it = formula_id.find(key);
        if (it != formula_id.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(formulas.size());
        formulas.push_back(f);
        formula_id.emplace(std::move(key), id);
        delta_memo.emplace_back();
        delta_done.push_back(0);
        if (f->op == LtlOp::Until) {
            if (untils.size() >= 64) throw AutomatonError("formula has too many until subformulas");
            untils.push_back(id);
        }
        return id;
    }

    int until_bit(uint32_t fid) const {
        for (size_t i = 0; i < untils.size(); ++i)
            if (untils[i] == fid) return static_cast<int>(i);
        return -1;
    }

    static std::vector<uint32_t> merged(const std::vector<uint32_t>& a, const std::vector<uint32_t>& b) {
        std::vector<uint32_t> out;
        std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
        return out;
    }

    static void push_move(std::vector<GbaMove>& moves, GbaMove m) {
        for (auto& e : moves) {
            if (e.cube == m.cube && e.next == m.next) {
                e.fulfilled |= m.fulfilled;
                return;
            }
        }
        moves.push_back(std::move(m));
    }

    static std::vector<GbaMove> product(const std::vector<GbaMove>& a, const std::vector<GbaMove>& b) {
        std::vector<GbaMove> out;
        for (const auto& x : a) {
            for (const auto& y : b) {
                Cube c{x.cube.pos | y.cube.pos, x.cube.neg | y.cube.neg};
                if (!c.satisfiable()) continue;
                push_move(out, {c, merged(x.next, y.next), x.fulfilled | y.fulfilled});
            }
        }
        return out;
    }

    // by value: interning below may reallocate the memo table
    std::vector<GbaMove> delta(uint32_t fid) {
        if (delta_done[fid]) return delta_memo[fid];
        LtlPtr f = formulas[fid];
        std::vector<GbaMove> out;
        switch (f->op) {
            case LtlOp::True:
                out.push_back({Cube{}, {}, 0});
                break;
            case LtlOp::False:
                break;
            case LtlOp::Atom: {
                int bit = table.atom_index(f->ap, f->agent);
                out.push_back({Cube{uint64_t{1} << bit, 0}, {}, 0});
                break;
            }
            case LtlOp::Not: {
                const LtlPtr& a = f->lhs;
                if (a->op != LtlOp::Atom) throw AutomatonError("negation above non-atom in core NNF");
                int bit = table.atom_index(a->ap, a->agent);
                out.push_back({Cube{0, uint64_t{1} << bit}, {}, 0});
                break;
            }
            case LtlOp::And:
                out = product(delta(intern(f->lhs)), delta(intern(f->rhs)));
                break;
            case LtlOp::Or: {
                out = delta(intern(f->lhs));
                for (const auto& m : delta(intern(f->rhs))) push_move(out, m);
                break;
            }
            case LtlOp::Next:
                out.push_back({Cube{}, {intern(f->lhs)}, 0});
                break;
            case LtlOp::Until: {
                uint64_t bit = uint64_t{1} << until_bit(fid);
                for (GbaMove m : delta(intern(f->rhs))) {
                    m.fulfilled |= bit;
                    push_move(out, m);
                }
                std::vector<GbaMove> self{{Cube{}, {fid}, 0}};
                for (const auto& m : product(delta(intern(f->lhs)), self)) push_move(out, m);
                break;
            }
            case LtlOp::Release: {
                std::vector<GbaMove> hold = delta(intern(f->lhs));
                hold.push_back({Cube{}, {fid}, 0});
                out = product(delta(intern(f->rhs)), hold);
                break;
            }
            default:
                throw AutomatonError("unsupported operator in core NNF");
        }
        delta_memo[fid] = out;
        delta_done[fid] = 1;
        return out;
    }
};

}  // namespace

Nba ltl_to_nba(const LtlPtr& nnf_formula, const AutomataLimits& limits) {
    LtlPtr core = to_core_nnf(nnf_formula);
    AtomTable table = collect_atoms(core, limits);
    GbaBuilder gb(table);
    uint32_t root = gb.intern(core);
    gb.delta(root);  // interns the full closure and fixes the until list

    // obligation-set states
    using ObSet = std::vector<uint32_t>;
    std::map<ObSet, uint32_t> state_id;
    std::vector<ObSet> states;
    std::vector<std::vector<GbaMove>> state_moves;
    auto get_state = [&](const ObSet& s) {
        auto it = state_id.find(s);
        if (it != state_id.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(states.size());
        state_id.emplace(s, id);
        states.push_back(s);
        state_moves.emplace_back();
        return id;
    };

    uint32_t init = get_state({root});
    for (uint32_t s = 0; s < states.size(); ++s) {
        std::vector<GbaMove> moves{{Cube{}, {}, 0}};  // empty obligation set: accept anything
        bool first = true;
        for (uint32_t fid : states[s]) {
            if (first) {
                moves = gb.delta(fid);
                first = false;
            } else {
                moves = GbaBuilder::product(moves, gb.delta(fid));
            }
        }
        state_moves[s] = std::move(moves);
        for (const auto& m : state_moves[s]) get_state(m.next);
        if (states.size() > limits.max_nba_states)
            throw AutomatonError("NBA state cap exceeded (" + std::to_string(limits.max_nba_states) + ")");
    }

    const size_t k = gb.untils.size();
    auto accept_bit = [&](const GbaMove& m, size_t j) {
        if ((m.fulfilled >> j) & 1) return true;
        return !std::binary_search(m.next.begin(), m.next.end(), gb.untils[j]);
    };

    // degeneralize with the standard counter
    Nba nba;
    nba.ap_names = table.ap_names;
    nba.atoms = table.atoms;
    nba.arity = table.arity;

    std::map<std::pair<uint32_t, uint32_t>, uint32_t> deg_id;
    std::vector<std::pair<uint32_t, uint32_t>> deg_states;
    auto get_deg = [&](uint32_t s, uint32_t level) {
        auto key = std::make_pair(s, level);
        auto it = deg_id.find(key);
        if (it != deg_id.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(deg_states.size());
        deg_id.emplace(key, id);
        deg_states.push_back(key);
        return id;
    };

    nba.initial = get_deg(init, 0);
    for (uint32_t id = 0; id < deg_states.size(); ++id) {
        auto [s, level] = deg_states[id];
        nba.moves.emplace_back();
        for (const auto& m : state_moves[s]) {
            uint32_t j = (level == k) ? 0 : level;
            while (j < k && accept_bit(m, j)) ++j;
            nba.moves[id].push_back({m.cube, get_deg(get_state(m.next), j)});
        }
        if (deg_states.size() > limits.max_nba_states)
            throw AutomatonError("NBA state cap exceeded (" + std::to_string(limits.max_nba_states) + ")");
    }
    nba.num_states = static_cast<uint32_t>(deg_states.size());
    nba.accepting.resize(nba.num_states, 0);
    for (uint32_t id = 0; id < nba.num_states; ++id)
        nba.accepting[id] = deg_states[id].second == k;
    return nba;
}

// --- NBA pruning -------------------------------------------------------------

namespace {

// Iterative Tarjan SCC over an adjacency callback.
std::vector<int> scc_decompose(uint32_t n, const std::function<void(uint32_t, std::vector<uint32_t>&)>& succs,
                               int& num_sccs) {
    std::vector<int> comp(n, -1), low(n), idx(n, -1);
    std::vector<uint32_t> stack, scratch;
    std::vector<char> on_stack(n, 0);
    int counter = 0;
    num_sccs = 0;

    struct Frame {
        uint32_t v;
        size_t child = 0;
        std::vector<uint32_t> nexts;
    };
    for (uint32_t root = 0; root < n; ++root) {
        if (idx[root] != -1) continue;
        std::vector<Frame> call;
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
                uint32_t v = f.v;
                call.pop_back();
                if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            }
        }
    }
    return comp;
}

// Keep only states that can reach an accepting cycle.
Nba prune_nba(const Nba& in) {
    int num_sccs = 0;
    auto comp = scc_decompose(
        in.num_states,
        [&](uint32_t v, std::vector<uint32_t>& out) {
            for (const auto& m : in.moves[v]) out.push_back(m.target);
        },
        num_sccs);

    std::vector<char> scc_has_edge(num_sccs, 0), scc_accepting(num_sccs, 0);
    for (uint32_t v = 0; v < in.num_states; ++v) {
        for (const auto& m : in.moves[v])
            if (comp[m.target] == comp[v]) scc_has_edge[comp[v]] = 1;
        if (in.accepting[v]) scc_accepting[comp[v]] = 1;
    }

    std::vector<char> useful(in.num_states, 0);
    std::vector<uint32_t> work;
    for (uint32_t v = 0; v < in.num_states; ++v)
        if (scc_accepting[comp[v]] && scc_has_edge[comp[v]]) {
            useful[v] = 1;
            work.push_back(v);
        }
    // backward closure
    std::vector<std::vector<uint32_t>> preds(in.num_states);
    for (uint32_t v = 0; v < in.num_states; ++v)
        for (const auto& m : in.moves[v]) preds[m.target].push_back(v);
    while (!work.empty()) {
        uint32_t v = work.back();
        work.pop_back();
        for (uint32_t p : preds[v])
            if (!useful[p]) {
                useful[p] = 1;
                work.push_back(p);
            }
    }

    Nba out;
    out.ap_names = in.ap_names;
    out.atoms = in.atoms;
    out.arity = in.arity;
    if (!useful[in.initial]) {
        out.num_states = 1;
        out.initial = 0;
        out.moves.resize(1);
        out.accepting = {0};
        return out;
    }
    std::vector<uint32_t> remap(in.num_states, UINT32_MAX);
    uint32_t next = 0;
    for (uint32_t v = 0; v < in.num_states; ++v)
        if (useful[v]) remap[v] = next++;
    out.num_states = next;
    out.initial = remap[in.initial];
    out.moves.resize(next);
    out.accepting.resize(next, 0);
    for (uint32_t v = 0; v < in.num_states; ++v) {
        if (!useful[v]) continue;
        out.accepting[remap[v]] = in.accepting[v];
        for (const auto& m : in.moves[v])
            if (useful[m.target]) out.moves[remap[v]].push_back({m.cube, remap[m.target]});
    }
    return out;
}

// --- letter classes -----------------------------------------------------------

struct LetterDomain {
    uint32_t num_classes = 0;
    std::vector<uint32_t> valuation_class;
    std::vector<uint64_t> representative;
};

/// Partition valuations by a signature function from valuations to byte vectors.
LetterDomain build_domain(size_t num_atoms, const AutomataLimits& limits,
                          const std::function<std::vector<uint8_t>(uint64_t)>& signature) {
    if (num_atoms > limits.max_atoms) throw AutomatonError("letter alphabet too large");
    LetterDomain dom;
    uint64_t n = uint64_t{1} << num_atoms;
    dom.valuation_class.resize(n);
    std::map<std::vector<uint8_t>, uint32_t> sig_class;
    for (uint64_t v = 0; v < n; ++v) {
        auto sig = signature(v);
        auto it = sig_class.find(sig);
        if (it == sig_class.end()) {
            it = sig_class.emplace(std::move(sig), dom.num_classes++).first;
            dom.representative.push_back(v);
        }
        dom.valuation_class[v] = it->second;
    }
    return dom;
}

// --- Safra trees ---------------------------------------------------------------

struct SafraTree {
    struct Node {
        uint32_t name;
        Bits label;
        bool mark = false;
        std::vector<int> kids;
    };
    std::vector<Node> nodes;  // preorder; empty vector = reject sink

    bool empty() const { return nodes.empty(); }

    std::vector<uint64_t> serialize() const {
        std::vector<uint64_t> key;
        key.push_back(nodes.size());
        std::function<void(int)> walk = [&](int i) {
            const Node& nd = nodes[i];
            key.push_back((uint64_t{nd.name} << 2) | (nd.mark ? 1u : 0u));
            key.push_back(nd.kids.size());
            for (uint64_t wrd : nd.label.w) key.push_back(wrd);
            for (int k : nd.kids) walk(k);
        };
        if (!nodes.empty()) walk(0);
        return key;
    }
};

struct SafraCtx {
    const Nba& nba;
    const LetterDomain& dom;
    size_t words;

    Bits accepting;

    explicit SafraCtx(const Nba& n, const LetterDomain& d) : nba(n), dom(d), accepting(n.num_states) {
        words = (n.num_states + 63) / 64;
        for (uint32_t s = 0; s < n.num_states; ++s)
            if (n.accepting[s]) accepting.set(s);
    }

    Bits delta_set(const Bits& src, uint32_t cls) const {
        Bits out(nba.num_states);
        uint64_t rep = dom.representative[cls];
        src.for_each([&](size_t s) {
            for (const auto& m : nba.moves[s])
                if (m.cube.matches(rep)) out.set(m.target);
        });
        return out;
    }

    SafraTree step(const SafraTree& t, uint32_t cls) const {
        if (t.empty()) return t;
        SafraTree r = t;
        // 1. clear marks, 2. spawn children for accepting intersections
        std::set<uint32_t> used;
        for (auto& nd : r.nodes) used.insert(nd.name);
        uint32_t next_name = 1;
        auto fresh = [&] {
            while (used.count(next_name)) ++next_name;
            used.insert(next_name);
            return next_name;
        };
        size_t original = r.nodes.size();
        for (size_t i = 0; i < original; ++i) {
            r.nodes[i].mark = false;
            Bits inter = r.nodes[i].label;
            inter &= accepting;
            if (inter.any()) {
                int kid = static_cast<int>(r.nodes.size());
                r.nodes.push_back({fresh(), inter, false, {}});
                r.nodes[i].kids.push_back(kid);
            }
        }
        // 3. powerset update
        for (auto& nd : r.nodes) nd.label = delta_set(nd.label, cls);
        // 4. horizontal merge: older siblings keep shared states
        std::function<void(int)> merge_h = [&](int i) {
            Bits seen(nba.num_states);
            for (int kid : r.nodes[i].kids) {
                std::function<void(int)> strip = [&](int j) {
                    r.nodes[j].label.and_not(seen);
                    for (int k : r.nodes[j].kids) strip(k);
                };
                strip(kid);
                seen |= r.nodes[kid].label;
                merge_h(kid);
            }
        };
        merge_h(0);
        // 5/6. drop empty nodes, vertical merge; rebuild in preorder
        SafraTree out;
        std::function<int(int)> rebuild = [&](int i) -> int {
            if (!r.nodes[i].label.any()) return -1;
            int self = static_cast<int>(out.nodes.size());
            out.nodes.push_back({r.nodes[i].name, r.nodes[i].label, r.nodes[i].mark, {}});
            Bits kid_union(nba.num_states);
            std::vector<int> kept;
            for (int kid : r.nodes[i].kids) {
                if (!r.nodes[kid].label.any()) continue;
                kid_union |= r.nodes[kid].label;
                kept.push_back(kid);
            }
            if (kid_union == r.nodes[i].label && !kept.empty()) {
                out.nodes[self].mark = true;  // vertical merge
            } else {
                for (int kid : kept) {
                    int c = rebuild(kid);
                    if (c >= 0) out.nodes[self].kids.push_back(c);
                }
            }
            return self;
        };
        if (rebuild(0) < 0) return SafraTree{};  // all runs died
        return out;
    }
};

void canonicalize_classes(Dra& d) {
    // merge letter classes with identical transition columns
    std::map<std::vector<uint32_t>, uint32_t> col_class;
    std::vector<uint32_t> remap(d.num_classes);
    std::vector<uint64_t> reps;
    uint32_t next = 0;
    for (uint32_t c = 0; c < d.num_classes; ++c) {
        std::vector<uint32_t> col(d.num_states);
        for (uint32_t q = 0; q < d.num_states; ++q) col[q] = d.trans[q][c];
        auto it = col_class.find(col);
        if (it == col_class.end()) {
            it = col_class.emplace(std::move(col), next++).first;
            reps.push_back(d.class_representative[c]);
        }
        remap[c] = it->second;
    }
    if (next == d.num_classes) return;
    std::vector<std::vector<uint32_t>> nt(d.num_states, std::vector<uint32_t>(next));
    for (uint32_t q = 0; q < d.num_states; ++q)
        for (uint32_t c = 0; c < d.num_classes; ++c) nt[q][remap[c]] = d.trans[q][c];
    d.trans = std::move(nt);
    for (auto& vc : d.valuation_class) vc = remap[vc];
    d.class_representative = std::move(reps);
    d.num_classes = next;
}

}  // namespace

Dra determinize_to_dra(const Nba& raw, const AutomataLimits& limits) {
    Nba n = prune_nba(raw);

    // letter classes from the distinct cubes
    std::vector<Cube> cubes;
    for (const auto& row : n.moves)
        for (const auto& m : row)
            if (std::find(cubes.begin(), cubes.end(), m.cube) == cubes.end()) cubes.push_back(m.cube);
    LetterDomain dom = build_domain(n.atoms.size(), limits, [&](uint64_t v) {
        std::vector<uint8_t> sig(cubes.size());
        for (size_t i = 0; i < cubes.size(); ++i) sig[i] = cubes[i].matches(v);
        return sig;
    });

    Dra d;
    d.ap_names = n.ap_names;
    d.atoms = n.atoms;
    d.arity = n.arity;
    d.num_classes = dom.num_classes;
    d.valuation_class = dom.valuation_class;
    d.class_representative = dom.representative;

    // deterministic NBA: reuse states, single pair (empty, accepting)
    bool deterministic = true;
    for (uint32_t s = 0; s < n.num_states && deterministic; ++s)
        for (uint32_t c = 0; c < dom.num_classes && deterministic; ++c) {
            int hits = 0;
            for (const auto& m : n.moves[s])
                if (m.cube.matches(dom.representative[c])) ++hits;
            if (hits > 1) deterministic = false;
        }
    if (deterministic) {
        // complete with a reject sink when some (state, class) has no move
        uint32_t sink = n.num_states;
        bool need_sink = false;
        d.trans.assign(n.num_states, std::vector<uint32_t>(dom.num_classes, 0));
        for (uint32_t s = 0; s < n.num_states; ++s)
            for (uint32_t c = 0; c < dom.num_classes; ++c) {
                uint32_t target = sink;
                for (const auto& m : n.moves[s])
                    if (m.cube.matches(dom.representative[c])) target = m.target;
                if (target == sink) need_sink = true;
                d.trans[s][c] = target;
            }
        d.num_states = n.num_states + (need_sink ? 1 : 0);
        if (need_sink) d.trans.push_back(std::vector<uint32_t>(dom.num_classes, sink));
        d.initial = n.initial;
        RabinPair pair;
        pair.L.assign(d.num_states, 0);
        pair.K.assign(d.num_states, 0);
        for (uint32_t s = 0; s < n.num_states; ++s) pair.K[s] = n.accepting[s];
        d.pairs.push_back(std::move(pair));
        canonicalize_classes(d);
        return merge_duplicate_states(d);
    }

    SafraCtx ctx(n, dom);
    SafraTree init;
    init.nodes.push_back({1, Bits(n.num_states), false, {}});
    init.nodes[0].label.set(n.initial);

    std::map<std::vector<uint64_t>, uint32_t> tree_id;
    std::vector<SafraTree> trees;
    auto get_tree = [&](SafraTree t) {
        auto key = t.serialize();
        auto it = tree_id.find(key);
        if (it != tree_id.end()) return it->second;
        uint32_t id = static_cast<uint32_t>(trees.size());
        tree_id.emplace(std::move(key), id);
        trees.push_back(std::move(t));
        return id;
    };

    d.initial = get_tree(init);
    for (uint32_t q = 0; q < trees.size(); ++q) {
        d.trans.emplace_back(dom.num_classes);
        for (uint32_t c = 0; c < dom.num_classes; ++c) {
            SafraTree next = ctx.step(trees[q], c);
            d.trans[q][c] = get_tree(std::move(next));
        }
        if (trees.size() > limits.max_dra_states)
            throw AutomatonError("DRA state cap exceeded (" + std::to_string(limits.max_dra_states) +
                                 "); formula too large for desk scale");
    }
    d.num_states = static_cast<uint32_t>(trees.size());

    // Rabin pairs per node name: K = trees where the name is marked,
    // L = trees where the name is absent.
    std::set<uint32_t> marked_names;
    for (const auto& t : trees)
        for (const auto& nd : t.nodes)
            if (nd.mark) marked_names.insert(nd.name);
    for (uint32_t name : marked_names) {
        RabinPair pair;
        pair.L.assign(d.num_states, 0);
        pair.K.assign(d.num_states, 0);
        for (uint32_t q = 0; q < d.num_states; ++q) {
            bool present = false, mark = false;
            for (const auto& nd : trees[q].nodes)
                if (nd.name == name) {
                    present = true;
                    mark = nd.mark;
                }
            if (!present) pair.L[q] = 1;
            if (mark) pair.K[q] = 1;
        }
        d.pairs.push_back(std::move(pair));
    }
    if (d.pairs.empty()) {
        // empty language: keep the acceptance condition non-empty but unsatisfiable
        RabinPair pair;
        pair.L.assign(d.num_states, 0);
        pair.K.assign(d.num_states, 0);
        d.pairs.push_back(std::move(pair));
    }
    canonicalize_classes(d);
    return merge_duplicate_states(d);
}

Dra merge_duplicate_states(const Dra& in) {
    // Moore-style partition refinement on (pair memberships, successor blocks)
    std::vector<uint32_t> block(in.num_states);
    {
        std::map<std::vector<char>, uint32_t> sig_block;
        for (uint32_t q = 0; q < in.num_states; ++q) {
            std::vector<char> sig;
            for (const auto& p : in.pairs) {
                sig.push_back(p.L[q]);
                sig.push_back(p.K[q]);
            }
            auto it = sig_block.find(sig);
            if (it == sig_block.end()) it = sig_block.emplace(std::move(sig), static_cast<uint32_t>(sig_block.size())).first;
            block[q] = it->second;
        }
    }
    while (true) {
        std::map<std::vector<uint32_t>, uint32_t> sig_block;
        std::vector<uint32_t> nb(in.num_states);
        for (uint32_t q = 0; q < in.num_states; ++q) {
            std::vector<uint32_t> sig{block[q]};
            for (uint32_t c = 0; c < in.num_classes; ++c) sig.push_back(block[in.trans[q][c]]);
            auto it = sig_block.find(sig);
            if (it == sig_block.end()) it = sig_block.emplace(std::move(sig), static_cast<uint32_t>(sig_block.size())).first;
            nb[q] = it->second;
        }
        bool stable = true;
        for (uint32_t q = 0; q < in.num_states; ++q)
            if (nb[q] != block[q]) stable = false;
        block = std::move(nb);
        if (stable) break;
    }

    // quotient, then keep only states reachable from the initial block
    uint32_t num_blocks = *std::max_element(block.begin(), block.end()) + 1;
    std::vector<uint32_t> rep(num_blocks, UINT32_MAX);
    for (uint32_t q = 0; q < in.num_states; ++q)
        if (rep[block[q]] == UINT32_MAX) rep[block[q]] = q;

    std::vector<uint32_t> order;
    std::vector<uint32_t> remap(num_blocks, UINT32_MAX);
    std::vector<uint32_t> work{block[in.initial]};
    remap[block[in.initial]] = 0;
    order.push_back(block[in.initial]);
    while (!work.empty()) {
        uint32_t b = work.back();
        work.pop_back();
        for (uint32_t c = 0; c < in.num_classes; ++c) {
            uint32_t tb = block[in.trans[rep[b]][c]];
            if (remap[tb] == UINT32_MAX) {
                remap[tb] = static_cast<uint32_t>(order.size());
                order.push_back(tb);
                work.push_back(tb);
            }
        }
    }

    Dra out;
    out.ap_names = in.ap_names;
    out.atoms = in.atoms;
    out.arity = in.arity;
    out.num_states = static_cast<uint32_t>(order.size());
    out.initial = 0;
    out.num_classes = in.num_classes;
    out.valuation_class = in.valuation_class;
    out.class_representative = in.class_representative;
    out.trans.resize(out.num_states);
    for (uint32_t i = 0; i < order.size(); ++i) {
        out.trans[i].resize(in.num_classes);
        for (uint32_t c = 0; c < in.num_classes; ++c)
            out.trans[i][c] = remap[block[in.trans[rep[order[i]]][c]]];
    }
    for (const auto& p : in.pairs) {
        RabinPair np;
        np.L.assign(out.num_states, 0);
        np.K.assign(out.num_states, 0);
        for (uint32_t i = 0; i < order.size(); ++i) {
            np.L[i] = p.L[rep[order[i]]];
            np.K[i] = p.K[rep[order[i]]];
        }
        out.pairs.push_back(std::move(np));
    }
    canonicalize_classes(out);
    return out;
}

// --- direct constructions ------------------------------------------------------

namespace {

bool eval_prop(const LtlPtr& f, const std::vector<TaggedAtom>& atoms,
               const std::vector<std::string>& ap_names, uint64_t valuation) {
    switch (f->op) {
        case LtlOp::True: return true;
        case LtlOp::False: return false;
        case LtlOp::Atom: {
            for (size_t i = 0; i < atoms.size(); ++i)
                if (ap_names[atoms[i].ap] == f->ap && static_cast<int>(atoms[i].agent) == f->agent)
                    return (valuation >> i) & 1;
            return false;
        }
        case LtlOp::Not: return !eval_prop(f->lhs, atoms, ap_names, valuation);
        case LtlOp::And: return eval_prop(f->lhs, atoms, ap_names, valuation) && eval_prop(f->rhs, atoms, ap_names, valuation);
        case LtlOp::Or: return eval_prop(f->lhs, atoms, ap_names, valuation) || eval_prop(f->rhs, atoms, ap_names, valuation);
        case LtlOp::Xor: return eval_prop(f->lhs, atoms, ap_names, valuation) != eval_prop(f->rhs, atoms, ap_names, valuation);
        case LtlOp::Implies: return !eval_prop(f->lhs, atoms, ap_names, valuation) || eval_prop(f->rhs, atoms, ap_names, valuation);
        default: throw AutomatonError("temporal operator in propositional context");
    }
}

struct PropClasses {
    AtomTable table;
    LetterDomain dom;
    std::vector<std::vector<bool>> truth;  // [prop][class]
};

PropClasses prop_classes(const std::vector<LtlPtr>& props, const AutomataLimits& limits) {
    PropClasses pc;
    for (const auto& p : props) {
        AtomTable sub = collect_atoms(p, limits);
        for (const auto& a : sub.atoms) pc.table.atom_index(sub.ap_names[a.ap], static_cast<int>(a.agent));
        pc.table.arity = std::max(pc.table.arity, sub.arity);
    }
    pc.dom = build_domain(pc.table.atoms.size(), limits, [&](uint64_t v) {
        std::vector<uint8_t> sig;
        for (const auto& p : props) sig.push_back(eval_prop(p, pc.table.atoms, pc.table.ap_names, v));
        return sig;
    });
    pc.truth.resize(props.size());
    for (size_t i = 0; i < props.size(); ++i) {
        pc.truth[i].resize(pc.dom.num_classes);
        for (uint32_t c = 0; c < pc.dom.num_classes; ++c)
            pc.truth[i][c] = eval_prop(props[i], pc.table.atoms, pc.table.ap_names, pc.dom.representative[c]);
    }
    return pc;
}

Dra from_prop_classes(const PropClasses& pc) {
    Dra d;
    d.ap_names = pc.table.ap_names;
    d.atoms = pc.table.atoms;
    d.arity = pc.table.arity;
    d.num_classes = pc.dom.num_classes;
    d.valuation_class = pc.dom.valuation_class;
    d.class_representative = pc.dom.representative;
    return d;
}

Dra reachability_dra(const LtlPtr& prop, const AutomataLimits& limits) {
    PropClasses pc = prop_classes({prop}, limits);
    Dra d = from_prop_classes(pc);
    d.num_states = 2;  // 0 waiting, 1 accepting sink
    d.initial = 0;
    d.trans = {std::vector<uint32_t>(d.num_classes), std::vector<uint32_t>(d.num_classes, 1)};
    for (uint32_t c = 0; c < d.num_classes; ++c) d.trans[0][c] = pc.truth[0][c] ? 1 : 0;
    d.pairs.push_back({{0, 0}, {0, 1}});
    canonicalize_classes(d);
    return d;
}

Dra safety_dra(const LtlPtr& prop, const AutomataLimits& limits) {
    PropClasses pc = prop_classes({prop}, limits);
    Dra d = from_prop_classes(pc);
    d.num_states = 2;  // 0 safe, 1 violation sink
    d.initial = 0;
    d.trans = {std::vector<uint32_t>(d.num_classes), std::vector<uint32_t>(d.num_classes, 1)};
    for (uint32_t c = 0; c < d.num_classes; ++c) d.trans[0][c] = pc.truth[0][c] ? 0 : 1;
    d.pairs.push_back({{0, 1}, {1, 0}});
    canonicalize_classes(d);
    return d;
}

Dra until_dra(const LtlPtr& lhs, const LtlPtr& rhs, const AutomataLimits& limits) {
    PropClasses pc = prop_classes({lhs, rhs}, limits);
    Dra d = from_prop_classes(pc);
    d.num_states = 3;  // 0 waiting, 1 accepting sink, 2 rejecting sink
    d.initial = 0;
    d.trans = {std::vector<uint32_t>(d.num_classes), std::vector<uint32_t>(d.num_classes, 1),
               std::vector<uint32_t>(d.num_classes, 2)};
    for (uint32_t c = 0; c < d.num_classes; ++c)
        d.trans[0][c] = pc.truth[1][c] ? 1 : (pc.truth[0][c] ? 0 : 2);
    d.pairs.push_back({{0, 0, 0}, {0, 1, 0}});
    canonicalize_classes(d);
    return merge_duplicate_states(d);
}

}  // namespace

Dra universal_dra(int arity) {
    Dra d;
    d.arity = arity;
    d.num_states = 1;
    d.initial = 0;
    d.num_classes = 1;
    d.valuation_class = {0};
    d.class_representative = {0};
    d.trans = {{0}};
    d.pairs.push_back({{0}, {1}});
    return d;
}

Dra ltl_to_dra(const LtlPtr& f, const AutomataLimits& limits) {
    LtlPtr n = to_nnf(f);
    if (n->op == LtlOp::True) return universal_dra(std::max(1, formula_arity(f)));
    if (n->op == LtlOp::Eventually && is_propositional(n->lhs)) return reachability_dra(n->lhs, limits);
    if (n->op == LtlOp::Globally && is_propositional(n->lhs)) return safety_dra(n->lhs, limits);
    if (n->op == LtlOp::Until && is_propositional(n->lhs) && is_propositional(n->rhs))
        return until_dra(n->lhs, n->rhs, limits);
    return determinize_to_dra(ltl_to_nba(n, limits), limits);
}

bool dra_accepts_lasso(const Dra& d, const LassoWord& w) {
    if (w.arity < d.arity)
        throw AutomatonError("lasso word arity below automaton arity");
    // remap word AP bits onto the automaton's ap order
    std::vector<int> ap_bit(d.ap_names.size(), -1);
    for (size_t i = 0; i < d.ap_names.size(); ++i)
        for (size_t j = 0; j < w.ap_names.size(); ++j)
            if (w.ap_names[j] == d.ap_names[i]) ap_bit[i] = static_cast<int>(j);
    auto valuation = [&](const std::vector<uint64_t>& letter) {
        uint64_t v = 0;
        for (size_t i = 0; i < d.atoms.size(); ++i) {
            const TaggedAtom& a = d.atoms[i];
            int bit = ap_bit[a.ap];
            if (bit >= 0 && ((letter[a.agent] >> bit) & 1)) v |= uint64_t{1} << i;
        }
        return v;
    };

    uint32_t q = d.initial;
    for (const auto& letter : w.prefix) q = d.step(q, valuation(letter));

    std::map<uint32_t, int> entry_pass;
    std::vector<std::vector<uint32_t>> visited;
    while (!entry_pass.count(q)) {
        entry_pass[q] = static_cast<int>(visited.size());
        visited.emplace_back();
        for (const auto& letter : w.loop) {
            visited.back().push_back(q);
            q = d.step(q, valuation(letter));
        }
    }
    std::set<uint32_t> cycle;
    for (size_t p = static_cast<size_t>(entry_pass[q]); p < visited.size(); ++p)
        cycle.insert(visited[p].begin(), visited[p].end());

    for (const auto& pair : d.pairs) {
        bool hits_l = false, hits_k = false;
        for (uint32_t s : cycle) {
            hits_l = hits_l || pair.L[s];
            hits_k = hits_k || pair.K[s];
        }
        if (!hits_l && hits_k) return true;
    }
    return false;
}

}  // namespace hypersynth
