#include "hyperspec.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace hypersynth {

std::string cmp_text(Cmp c) {
    switch (c) {
        case Cmp::Lt: return "<";
        case Cmp::Le: return "<=";
        case Cmp::Gt: return ">";
        case Cmp::Ge: return ">=";
    }
    return "?";
}

bool cmp_holds(double value, Cmp c, double bound) {
    switch (c) {
        case Cmp::Lt: return value < bound;
        case Cmp::Le: return value <= bound;
        case Cmp::Gt: return value > bound;
        case Cmp::Ge: return value >= bound;
    }
    return false;
}

Cmp cmp_negate(Cmp c) {
    switch (c) {
        case Cmp::Lt: return Cmp::Ge;
        case Cmp::Le: return Cmp::Gt;
        case Cmp::Gt: return Cmp::Le;
        case Cmp::Ge: return Cmp::Lt;
    }
    return c;
}

int HyperFormula::policy_var_index(const std::string& name) const {
    for (size_t i = 0; i < policy_vars.size(); ++i)
        if (policy_vars[i] == name) return static_cast<int>(i);
    return -1;
}

// --- parsing --------------------------------------------------------------------

namespace {

std::vector<std::string> split_declarations(const std::string& text) {
    std::vector<std::string> decls;
    std::string current;
    bool in_body = false;  // inside [...] the ';' and '#' rules are suspended
    for (size_t i = 0; i < text.size(); ++i) {
        char ch = text[i];
        if (ch == '[') in_body = true;
        if (ch == ']') in_body = false;
        if (!in_body && ch == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
            continue;
        }
        if (!in_body && (ch == ';' || ch == '\n')) {
            decls.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    decls.push_back(current);
    std::vector<std::string> out;
    for (auto& d : decls) {
        size_t a = d.find_first_not_of(" \t\r");
        if (a == std::string::npos) continue;
        size_t b = d.find_last_not_of(" \t\r");
        out.push_back(d.substr(a, b - a + 1));
    }
    return out;
}

struct DeclParser {
    const std::string& s;
    size_t pos = 0;

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(const std::string& word) {
        skip();
        if (s.compare(pos, word.size(), word) == 0) {
            if (std::isalpha(static_cast<unsigned char>(word[0]))) {
                size_t end = pos + word.size();
                if (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
                    return false;
            }
            pos += word.size();
            return true;
        }
        return false;
    }
    bool peek(const std::string& word) {
        size_t save = pos;
        bool ok = eat(word);
        pos = save;
        return ok;
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw SpecError("specification syntax error: " + msg + " in '" + s + "'");
    }
    std::string ident() {
        skip();
        size_t start = pos;
        while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
            ++pos;
        if (start == pos) fail("expected identifier");
        return s.substr(start, pos - start);
    }
    double number() {
        skip();
        size_t start = pos;
        while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                                  s[pos] == 'e' || s[pos] == '-' || s[pos] == '+'))
            ++pos;
        if (start == pos) fail("expected number");
        return std::stod(s.substr(start, pos - start));
    }
};

LtlPtr parse_body_formula(DeclParser& p) {
    p.skip();
    if (p.pos >= p.s.size() || p.s[p.pos] != '[') p.fail("expected '[' before formula");
    size_t open = p.pos;
    int depth = 0;
    size_t close = std::string::npos;
    for (size_t i = open; i < p.s.size(); ++i) {
        if (p.s[i] == '[') ++depth;
        if (p.s[i] == ']' && --depth == 0) {
            close = i;
            break;
        }
    }
    if (close == std::string::npos) p.fail("unterminated '['");
    std::string inner = p.s.substr(open + 1, close - open - 1);
    p.pos = close + 1;
    try {
        return parse_ltl(inner);
    } catch (const FormulaError& e) {
        throw SpecError(std::string("bad formula body: ") + e.what());
    }
}

uint32_t parse_constraint(DeclParser& p, HyperFormula& h) {
    ProbConstraint c;
    p.skip();
    if (p.eat("Pmax")) {
        c.kind = ProbConstraint::Kind::Optimize;
        c.maximize = true;
    } else if (p.eat("Pmin")) {
        c.kind = ProbConstraint::Kind::Optimize;
        c.maximize = false;
    } else if (p.peek("Rmax") || p.peek("Rmin")) {
        c.kind = ProbConstraint::Kind::RewardOptimize;
        c.maximize = p.eat("Rmax");
        if (!c.maximize) p.eat("Rmin");
        c.reward_name = "default";
        if (p.eat("{")) {
            c.reward_name = p.ident();
            if (p.eat("@")) c.reward_agent = p.ident();
            if (!p.eat("}")) p.fail("expected '}' after reward name");
        }
    } else if (p.eat("P")) {
        c.kind = ProbConstraint::Kind::Threshold;
        p.skip();
        if (p.eat(">=")) c.cmp = Cmp::Ge;
        else if (p.eat("<=")) c.cmp = Cmp::Le;
        else if (p.eat(">")) c.cmp = Cmp::Gt;
        else if (p.eat("<")) c.cmp = Cmp::Lt;
        else p.fail("expected comparison after P");
        c.bound = p.number();
        if (c.bound < 0.0 || c.bound > 1.0) throw SpecError("probability threshold outside [0,1]");
    } else {
        p.fail("expected probability constraint (P/Pmax/Pmin/Rmax/Rmin)");
    }
    c.body = parse_body_formula(p);
    if (c.kind == ProbConstraint::Kind::RewardOptimize && !is_propositional(c.body))
        throw SpecError("reward goal event must be propositional");
    h.constraints.push_back(std::move(c));
    BodyNode leaf;
    leaf.kind = BodyNode::Kind::Leaf;
    leaf.constraint = static_cast<uint32_t>(h.constraints.size() - 1);
    h.body_nodes.push_back(leaf);
    return static_cast<uint32_t>(h.body_nodes.size() - 1);
}

// Negation is normalized away: over thresholds it flips the comparison, over
// and/or it applies De Morgan.
uint32_t parse_body_unary(DeclParser& p, HyperFormula& h, bool negate);
uint32_t parse_body_or(DeclParser& p, HyperFormula& h, bool negate);

uint32_t parse_body_and(DeclParser& p, HyperFormula& h, bool negate) {
    uint32_t first = parse_body_unary(p, h, negate);
    std::vector<uint32_t> kids{first};
    while (p.eat("&")) kids.push_back(parse_body_unary(p, h, negate));
    if (kids.size() == 1) return first;
    BodyNode n;
    n.kind = negate ? BodyNode::Kind::Or : BodyNode::Kind::And;
    n.children = std::move(kids);
    h.body_nodes.push_back(std::move(n));
    return static_cast<uint32_t>(h.body_nodes.size() - 1);
}

uint32_t parse_body_or(DeclParser& p, HyperFormula& h, bool negate) {
    uint32_t first = parse_body_and(p, h, negate);
    std::vector<uint32_t> kids{first};
    while (p.eat("|")) kids.push_back(parse_body_and(p, h, negate));
    if (kids.size() == 1) return first;
    BodyNode n;
    n.kind = negate ? BodyNode::Kind::And : BodyNode::Kind::Or;
    n.children = std::move(kids);
    h.body_nodes.push_back(std::move(n));
    return static_cast<uint32_t>(h.body_nodes.size() - 1);
}

uint32_t parse_body_unary(DeclParser& p, HyperFormula& h, bool negate) {
    p.skip();
    if (p.eat("!")) return parse_body_unary(p, h, !negate);
    if (p.eat("(")) {
        uint32_t n = parse_body_or(p, h, negate);
        if (!p.eat(")")) p.fail("expected ')'");
        return n;
    }
    uint32_t leaf = parse_constraint(p, h);
    if (negate) {
        ProbConstraint& c = h.constraints[h.body_nodes[leaf].constraint];
        if (c.kind != ProbConstraint::Kind::Threshold)
            throw SpecError("cannot negate an optimization objective");
        c.cmp = cmp_negate(c.cmp);
    }
    return leaf;
}

}  // namespace

HyperFormula parse_spec(const std::string& text) {
    HyperFormula h;
    bool have_body = false;
    for (const std::string& decl : split_declarations(text)) {
        DeclParser p{decl};
        if (p.eat("exists")) {
            if (!h.policy_vars.empty()) throw SpecError("duplicate 'exists' declaration");
            if (!p.eat("(")) p.fail("expected '(' after exists");
            while (!p.eat(")")) h.policy_vars.push_back(p.ident());
            if (h.policy_vars.empty()) throw SpecError("empty policy-variable list");
        } else if (p.peek("forall") || p.peek("exist")) {
            AgentQuantifier q;
            if (p.eat("forall")) {
                q.universal = true;
            } else {
                p.eat("exist");
                q.universal = false;
            }
            q.state_var = p.ident();
            if (!p.eat("in")) p.fail("expected 'in'");
            if (!p.eat("{")) p.fail("expected '{'");
            while (!p.eat("}")) {
                StateRef ref;
                p.skip();
                if (p.pos < p.s.size() && std::isdigit(static_cast<unsigned char>(p.s[p.pos]))) {
                    ref.by_index = true;
                    size_t start = p.pos;
                    while (p.pos < p.s.size() && std::isdigit(static_cast<unsigned char>(p.s[p.pos]))) ++p.pos;
                    ref.index = static_cast<uint32_t>(std::stoul(p.s.substr(start, p.pos - start)));
                } else {
                    ref.label = p.ident();
                }
                q.initial_set.push_back(std::move(ref));
                p.eat(",");
            }
            if (!p.eat("(")) p.fail("expected '(policy-var)'");
            q.policy_var = p.ident();
            if (!p.eat(")")) p.fail("expected ')'");
            if (h.policy_var_index(q.policy_var) < 0)
                throw SpecError("reference to undeclared policy variable '" + q.policy_var + "'");
            h.agents.push_back(std::move(q));
        } else {
            if (have_body) throw SpecError("multiple body declarations");
            h.body_root = parse_body_or(p, h, false);
            p.skip();
            if (p.pos != decl.size()) p.fail("trailing input");
            have_body = true;
        }
    }
    if (h.policy_vars.empty()) throw SpecError("missing 'exists' policy declaration");
    if (h.agents.empty()) throw SpecError("missing agent quantifiers");
    if (!have_body) throw SpecError("missing probability constraint body");
    return h;
}

HyperFormula load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open specification file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::vector<StateId> resolve_state_ref(const StateRef& ref, const Mdp& m) {
    std::vector<StateId> out;
    if (ref.by_index) {
        if (ref.index >= m.num_states)
            throw SpecError("initial state index " + std::to_string(ref.index) + " out of range");
        out.push_back(ref.index);
        return out;
    }
    uint32_t ap = m.ap_id(ref.label);
    if (ap >= kMaxAtomicPropositions)
        throw SpecError("initial state label '" + ref.label + "' is not a declared proposition");
    for (StateId s = 0; s < m.num_states; ++s)
        if (m.labels[s] & (uint64_t{1} << ap)) out.push_back(s);
    if (out.empty()) throw SpecError("no state carries initial label '" + ref.label + "'");
    return out;
}

std::vector<std::string> check_well_formed(const HyperFormula& h, const Mdp& m) {
    std::vector<std::string> report;

    // policy prefix: n <= m and every policy variable referenced
    if (h.policy_vars.size() > h.agents.size())
        report.push_back("more policy variables than agents");
    std::set<std::string> seen_vars;
    for (const auto& v : h.policy_vars) {
        if (!seen_vars.insert(v).second) report.push_back("duplicate policy variable '" + v + "'");
    }
    for (const auto& v : h.policy_vars) {
        bool used = false;
        for (const auto& q : h.agents) used = used || q.policy_var == v;
        if (!used) report.push_back("unbound policy variable '" + v + "' (no agent references it)");
    }
    std::set<std::string> state_vars;
    for (const auto& q : h.agents) {
        if (!state_vars.insert(q.state_var).second)
            report.push_back("duplicate state variable '" + q.state_var + "'");
        if (q.initial_set.empty())
            report.push_back("empty initial set for '" + q.state_var + "'");
        for (const auto& ref : q.initial_set) {
            try {
                resolve_state_ref(ref, m);
            } catch (const SpecError& e) {
                report.push_back(e.what());
            }
        }
    }

    // body: every tagged state variable bound by a quantifier
    for (const auto& c : h.constraints) {
        for (const std::string& tag : unresolved_tags(c.body))
            if (!state_vars.count(tag)) report.push_back("unbound state variable '" + tag + "'");
        int arity = formula_arity(c.body);
        if (arity > static_cast<int>(h.agents.size()))
            report.push_back("formula references agent index " + std::to_string(arity) +
                             " beyond the quantifier prefix");
        for (const auto& [ap, agent] : tagged_atoms(c.body)) {
            (void)agent;
            if (m.ap_id(ap) >= kMaxAtomicPropositions)
                report.push_back("formula proposition '" + ap + "' not declared by the model");
        }
        if (c.kind == ProbConstraint::Kind::RewardOptimize) {
            if (!m.rewards)
                report.push_back("reward objective but the model declares no rewards");
            if (!c.reward_agent.empty() && !state_vars.count(c.reward_agent))
                report.push_back("reward objective charges unknown state variable '" + c.reward_agent + "'");
        }
    }

    size_t optimizing = 0;
    for (const auto& c : h.constraints)
        if (c.kind != ProbConstraint::Kind::Threshold) ++optimizing;
    if (optimizing > 1) report.push_back("multiple optimization objectives");
    if (optimizing == 1 && h.constraints.size() > 1)
        report.push_back("optimization objective combined with other constraints");

    return report;
}

HyperFormula resolve_spec(const HyperFormula& h) {
    HyperFormula out = h;
    std::vector<std::string> vars;
    for (const auto& q : h.agents) vars.push_back(q.state_var);
    for (auto& c : out.constraints) c.body = resolve_tags(c.body, vars);
    return out;
}

Expansion expand_quantifiers(const HyperFormula& h, const Mdp& m) {
    Expansion ex;
    const uint32_t mcount = h.agent_count();

    Bindings base;
    base.agent_count = mcount;
    base.num_policy_vars = static_cast<uint32_t>(h.policy_vars.size());
    base.policy_var_of_agent.resize(mcount);
    base.initial_state_of_agent.assign(mcount, 0);
    base.agents_of_policy_var.assign(h.policy_vars.size(), {});
    for (uint32_t i = 0; i < mcount; ++i) {
        int v = h.policy_var_index(h.agents[i].policy_var);
        base.policy_var_of_agent[i] = static_cast<uint32_t>(v);
        base.agents_of_policy_var[static_cast<size_t>(v)].push_back(i);
    }

    std::vector<std::vector<StateId>> choices(mcount);
    for (uint32_t i = 0; i < mcount; ++i) {
        std::set<StateId> set;
        for (const auto& ref : h.agents[i].initial_set)
            for (StateId s : resolve_state_ref(ref, m)) set.insert(s);
        choices[i].assign(set.begin(), set.end());
    }

    // innermost quantifier varies fastest; build the tree outermost-first
    std::function<uint32_t(uint32_t, Bindings&)> build = [&](uint32_t level, Bindings& acc) -> uint32_t {
        if (level == mcount) {
            ex.leaves.push_back(acc);
            Expansion::Node leaf;
            leaf.kind = Expansion::Node::Kind::Leaf;
            leaf.leaf = static_cast<uint32_t>(ex.leaves.size() - 1);
            ex.nodes.push_back(leaf);
            return static_cast<uint32_t>(ex.nodes.size() - 1);
        }
        std::vector<uint32_t> kids;
        for (StateId s : choices[level]) {
            acc.initial_state_of_agent[level] = s;
            kids.push_back(build(level + 1, acc));
        }
        if (kids.size() == 1) return kids[0];
        Expansion::Node n;
        n.kind = h.agents[level].universal ? Expansion::Node::Kind::And : Expansion::Node::Kind::Or;
        n.children = std::move(kids);
        ex.nodes.push_back(std::move(n));
        return static_cast<uint32_t>(ex.nodes.size() - 1);
    };
    Bindings acc = base;
    ex.root = build(0, acc);

    if (has_optimization(h) && ex.leaves.size() != 1)
        throw SpecError("optimization objectives require singleton initial-state sets");
    return ex;
}

bool has_optimization(const HyperFormula& h) {
    for (const auto& c : h.constraints)
        if (c.kind != ProbConstraint::Kind::Threshold) return true;
    return false;
}

bool is_dec_fragment(const HyperFormula& h) {
    // (i) policy-variable/agent bijection
    if (h.policy_vars.size() != h.agents.size()) return false;
    std::set<std::string> used;
    for (const auto& q : h.agents)
        if (!used.insert(q.policy_var).second) return false;
    // (ii) exactly one probability operator
    if (h.constraints.size() != 1) return false;
    // (iii) singleton initial sets; a label may denote several states, so only
    // explicit indices count as singletons here
    for (const auto& q : h.agents)
        if (q.initial_set.size() != 1 || !q.initial_set[0].by_index) return false;
    return true;
}

std::string print_spec(const HyperFormula& h) {
    std::ostringstream out;
    out << "exists (";
    for (size_t i = 0; i < h.policy_vars.size(); ++i) out << (i ? " " : "") << h.policy_vars[i];
    out << ");\n";
    for (const auto& q : h.agents) {
        out << (q.universal ? "forall " : "exist ") << q.state_var << " in {";
        for (size_t i = 0; i < q.initial_set.size(); ++i) {
            if (i) out << ", ";
            if (q.initial_set[i].by_index)
                out << q.initial_set[i].index;
            else
                out << q.initial_set[i].label;
        }
        out << "} (" << q.policy_var << ");\n";
    }
    std::function<void(uint32_t)> pr = [&](uint32_t n) {
        const BodyNode& node = h.body_nodes[n];
        if (node.kind == BodyNode::Kind::Leaf) {
            const ProbConstraint& c = h.constraints[node.constraint];
            switch (c.kind) {
                case ProbConstraint::Kind::Threshold:
                    out << "P " << cmp_text(c.cmp) << ' ' << c.bound;
                    break;
                case ProbConstraint::Kind::Optimize:
                    out << (c.maximize ? "Pmax" : "Pmin");
                    break;
                case ProbConstraint::Kind::RewardOptimize:
                    out << (c.maximize ? "Rmax" : "Rmin") << '{' << c.reward_name;
                    if (!c.reward_agent.empty()) out << '@' << c.reward_agent;
                    out << '}';
                    break;
            }
            out << " [ " << print_ltl(c.body) << " ]";
            return;
        }
        const char* sep = node.kind == BodyNode::Kind::And ? " & " : " | ";
        out << '(';
        for (size_t i = 0; i < node.children.size(); ++i) {
            if (i) out << sep;
            pr(node.children[i]);
        }
        out << ')';
    };
    pr(h.body_root);
    out << ";\n";
    return out.str();
}

}  // namespace hypersynth
