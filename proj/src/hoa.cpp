#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "automata.hpp"

namespace hypersynth {

namespace {

// --- boolean label expressions over AP indices ---------------------------------

struct LabelExpr {
    enum Kind { True, False, Ap, Not, And, Or } kind;
    uint32_t ap = 0;
    std::unique_ptr<LabelExpr> lhs, rhs;
};

struct LabelParser {
    const std::string& text;
    size_t pos = 0;

    void skip() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw AutomatonError("bad HOA label '" + text + "': " + msg);
    }

    std::unique_ptr<LabelExpr> primary() {
        skip();
        if (eat('(')) {
            auto e = disj();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        if (eat('!')) {
            auto e = std::make_unique<LabelExpr>();
            e->kind = LabelExpr::Not;
            e->lhs = primary();
            return e;
        }
        if (eat('t')) {
            auto e = std::make_unique<LabelExpr>();
            e->kind = LabelExpr::True;
            return e;
        }
        if (eat('f')) {
            auto e = std::make_unique<LabelExpr>();
            e->kind = LabelExpr::False;
            return e;
        }
        skip();
        size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (start == pos) fail("expected AP index");
        auto e = std::make_unique<LabelExpr>();
        e->kind = LabelExpr::Ap;
        e->ap = static_cast<uint32_t>(std::stoul(text.substr(start, pos - start)));
        return e;
    }
    std::unique_ptr<LabelExpr> conj() {
        auto e = primary();
        while (eat('&')) {
            auto n = std::make_unique<LabelExpr>();
            n->kind = LabelExpr::And;
            n->lhs = std::move(e);
            n->rhs = primary();
            e = std::move(n);
        }
        return e;
    }
    std::unique_ptr<LabelExpr> disj() {
        auto e = conj();
        while (eat('|')) {
            auto n = std::make_unique<LabelExpr>();
            n->kind = LabelExpr::Or;
            n->lhs = std::move(e);
            n->rhs = conj();
            e = std::move(n);
        }
        return e;
    }
};

bool eval_label(const LabelExpr& e, uint64_t valuation) {
    switch (e.kind) {
        case LabelExpr::True: return true;
        case LabelExpr::False: return false;
        case LabelExpr::Ap: return (valuation >> e.ap) & 1;
        case LabelExpr::Not: return !eval_label(*e.lhs, valuation);
        case LabelExpr::And: return eval_label(*e.lhs, valuation) && eval_label(*e.rhs, valuation);
        case LabelExpr::Or: return eval_label(*e.lhs, valuation) || eval_label(*e.rhs, valuation);
    }
    return false;
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

// Greedy cube cover: grow each uncovered valuation to a maximal cube inside
// the set, for readable labels.
std::string cover_to_label(const std::vector<char>& in_set, size_t num_atoms) {
    uint64_t n = uint64_t{1} << num_atoms;
    bool all = true, none = true;
    for (uint64_t v = 0; v < n; ++v) (in_set[v] ? none : all) = false;
    if (all) return "t";
    if (none) return "f";

    std::vector<char> covered(n, 0);
    std::vector<std::pair<uint64_t, uint64_t>> cubes;  // (care mask, values)
    for (uint64_t v = 0; v < n; ++v) {
        if (!in_set[v] || covered[v]) continue;
        uint64_t care = n - 1;
        for (size_t b = 0; b < num_atoms; ++b) {
            uint64_t trial_care = care & ~(uint64_t{1} << b);
            // all valuations matching (trial_care, v) must lie in the set
            bool ok = true;
            std::function<bool(uint64_t, size_t)> check = [&](uint64_t base, size_t bit) -> bool {
                if (bit == num_atoms) return in_set[base] != 0;
                if (trial_care & (uint64_t{1} << bit))
                    return check(base, bit + 1);
                return check(base & ~(uint64_t{1} << bit), bit + 1) &&
                       check(base | (uint64_t{1} << bit), bit + 1);
            };
            ok = check(v, 0);
            if (ok) care = trial_care;
        }
        for (uint64_t u = 0; u < n; ++u)
            if ((u & care) == (v & care)) covered[u] = 1;
        cubes.emplace_back(care, v & care);
    }
    std::string out;
    for (size_t i = 0; i < cubes.size(); ++i) {
        if (i) out += " | ";
        auto [care, vals] = cubes[i];
        if (care == 0) return "t";
        std::string cube;
        for (size_t b = 0; b < num_atoms; ++b) {
            if (!(care & (uint64_t{1} << b))) continue;
            if (!cube.empty()) cube += " & ";
            if (!(vals & (uint64_t{1} << b))) cube += '!';
            cube += std::to_string(b);
        }
        out += cubes.size() > 1 ? "(" + cube + ")" : cube;
    }
    return out;
}

}  // namespace

Dra parse_hoa(std::istream& in) {
    std::string line;
    uint32_t num_states = 0;
    bool have_states = false, have_start = false, body = false, ended = false;
    uint32_t start = 0;
    size_t num_pairs = 0;
    bool rabin = false;
    std::vector<std::string> ap_raw;

    struct Edge {
        std::unique_ptr<LabelExpr> label;
        uint32_t target;
    };
    std::vector<std::vector<Edge>> edges;
    std::vector<std::vector<uint32_t>> marks;
    int current = -1;

    auto header_rest = [](const std::string& l, size_t colon) {
        std::string r = l.substr(colon + 1);
        size_t a = r.find_first_not_of(" \t");
        return a == std::string::npos ? std::string() : r.substr(a);
    };

    while (std::getline(in, line)) {
        // strip comments and whitespace
        size_t c = line.find("/*");
        if (c != std::string::npos) line.erase(c);
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        size_t first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        line = line.substr(first);

        if (!body) {
            if (line == "--BODY--") {
                if (!have_states || !have_start) throw AutomatonError("HOA header incomplete");
                if (!rabin) throw AutomatonError("unsupported acceptance (need acc-name: Rabin)");
                body = true;
                edges.resize(num_states);
                marks.resize(num_states);
                continue;
            }
            size_t colon = line.find(':');
            if (colon == std::string::npos) throw AutomatonError("malformed HOA header line: " + line);
            std::string key = line.substr(0, colon);
            std::string rest = header_rest(line, colon);
            if (key == "HOA") {
                if (rest != "v1") throw AutomatonError("unsupported HOA version: " + rest);
            } else if (key == "States") {
                num_states = static_cast<uint32_t>(std::stoul(rest));
                have_states = true;
            } else if (key == "Start") {
                if (rest.find('&') != std::string::npos)
                    throw AutomatonError("conjunctive start sets not supported");
                start = static_cast<uint32_t>(std::stoul(rest));
                have_start = true;
            } else if (key == "AP") {
                std::istringstream as(rest);
                size_t k;
                as >> k;
                std::string tok;
                std::string acc;
                while (as >> std::ws && std::getline(as, tok, '"')) {
                    if (std::getline(as, tok, '"')) ap_raw.push_back(tok);
                }
                if (ap_raw.size() != k) throw AutomatonError("HOA AP count mismatch");
            } else if (key == "acc-name") {
                std::istringstream as(rest);
                std::string name;
                as >> name >> num_pairs;
                if (name != "Rabin")
                    throw AutomatonError("unsupported acceptance name '" + name + "'");
                rabin = true;
            } else if (key == "Acceptance") {
                std::istringstream as(rest);
                size_t sets;
                as >> sets;
                if (rabin && sets != 2 * num_pairs)
                    throw AutomatonError("Acceptance set count does not match Rabin pairs");
            }
            // name:, tool:, properties:, comments are tolerated
        } else {
            if (line == "--END--") {
                ended = true;
                break;
            }
            if (line.rfind("State:", 0) == 0) {
                std::string rest = header_rest(line, 5);
                std::istringstream ss(rest);
                uint32_t id;
                if (!(ss >> id) || id >= num_states) throw AutomatonError("bad State line: " + line);
                current = static_cast<int>(id);
                std::string tail;
                std::getline(ss, tail);
                size_t b = tail.find('{');
                if (b != std::string::npos) {
                    size_t e = tail.find('}', b);
                    if (e == std::string::npos) throw AutomatonError("unterminated acceptance marks");
                    std::istringstream ms(tail.substr(b + 1, e - b - 1));
                    uint32_t mk;
                    while (ms >> mk) marks[id].push_back(mk);
                }
            } else if (line[0] == '[') {
                if (current < 0) throw AutomatonError("edge before any State line");
                size_t close = line.find(']');
                if (close == std::string::npos) throw AutomatonError("unterminated label");
                std::string lab = line.substr(1, close - 1);
                std::string rest = line.substr(close + 1);
                if (rest.find('{') != std::string::npos)
                    throw AutomatonError("transition acceptance marks not supported");
                uint32_t target = static_cast<uint32_t>(std::stoul(rest));
                if (target >= num_states) throw AutomatonError("edge target out of range");
                LabelParser lp{lab};
                auto expr = lp.disj();
                lp.skip();
                if (lp.pos != lab.size()) lp.fail("trailing input");
                edges[static_cast<size_t>(current)].push_back({std::move(expr), target});
            } else {
                throw AutomatonError("implicit-label HOA bodies not supported: " + line);
            }
        }
    }
    if (!ended) throw AutomatonError("missing --END--");
    if (num_states == 0) throw AutomatonError("HOA automaton has no states");

    Dra d;
    for (const std::string& raw : ap_raw) {
        std::string name = unquote(raw);
        size_t at = name.rfind('@');
        if (at == std::string::npos || at + 1 >= name.size())
            throw AutomatonError("HOA AP '" + name + "' is not of the indexed form ap@k");
        std::string base = name.substr(0, at);
        std::string idx = name.substr(at + 1);
        if (!std::all_of(idx.begin(), idx.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); }))
            throw AutomatonError("HOA AP '" + name + "' is not of the indexed form ap@k");
        int agent = std::stoi(idx) - 1;
        if (agent < 0) throw AutomatonError("HOA AP index must be >= 1");
        uint32_t ap;
        auto it = std::find(d.ap_names.begin(), d.ap_names.end(), base);
        if (it == d.ap_names.end()) {
            d.ap_names.push_back(base);
            ap = static_cast<uint32_t>(d.ap_names.size() - 1);
        } else {
            ap = static_cast<uint32_t>(it - d.ap_names.begin());
        }
        d.atoms.push_back({ap, static_cast<uint32_t>(agent)});
        d.arity = std::max(d.arity, agent + 1);
    }
    AutomataLimits limits;
    if (d.atoms.size() > limits.max_atoms) throw AutomatonError("HOA alphabet too large");

    // totality/determinism check and per-valuation successor table
    uint64_t n_val = uint64_t{1} << d.atoms.size();
    std::vector<std::vector<uint32_t>> succ(num_states, std::vector<uint32_t>(n_val));
    for (uint32_t q = 0; q < num_states; ++q) {
        for (uint64_t v = 0; v < n_val; ++v) {
            int hit = -1;
            for (const auto& e : edges[q]) {
                if (eval_label(*e.label, v)) {
                    if (hit >= 0) throw AutomatonError("HOA automaton is nondeterministic at state " + std::to_string(q));
                    hit = static_cast<int>(e.target);
                }
            }
            if (hit < 0) throw AutomatonError("HOA transition function not total at state " + std::to_string(q));
            succ[q][v] = static_cast<uint32_t>(hit);
        }
    }

    // letter classes: valuations with identical successor columns
    std::map<std::vector<uint32_t>, uint32_t> col_class;
    d.valuation_class.resize(n_val);
    for (uint64_t v = 0; v < n_val; ++v) {
        std::vector<uint32_t> col(num_states);
        for (uint32_t q = 0; q < num_states; ++q) col[q] = succ[q][v];
        auto it = col_class.find(col);
        if (it == col_class.end()) {
            it = col_class.emplace(std::move(col), d.num_classes++).first;
            d.class_representative.push_back(v);
        }
        d.valuation_class[v] = it->second;
    }
    d.num_states = num_states;
    d.initial = start;
    d.trans.assign(num_states, std::vector<uint32_t>(d.num_classes));
    for (uint32_t q = 0; q < num_states; ++q)
        for (uint32_t c = 0; c < d.num_classes; ++c) d.trans[q][c] = succ[q][d.class_representative[c]];

    d.pairs.resize(std::max<size_t>(num_pairs, 1));
    for (auto& p : d.pairs) {
        p.L.assign(num_states, 0);
        p.K.assign(num_states, 0);
    }
    for (uint32_t q = 0; q < num_states; ++q)
        for (uint32_t mk : marks[q]) {
            if (mk >= 2 * num_pairs) throw AutomatonError("acceptance mark out of range");
            if (mk % 2 == 0)
                d.pairs[mk / 2].L[q] = 1;
            else
                d.pairs[mk / 2].K[q] = 1;
        }
    return d;
}

Dra parse_hoa_text(const std::string& text) {
    std::istringstream in(text);
    return parse_hoa(in);
}

Dra load_hoa(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AutomatonError("cannot open HOA file '" + path + "'");
    return parse_hoa(in);
}

void emit_hoa(const Dra& d, std::ostream& out) {
    out << "HOA: v1\n";
    out << "States: " << d.num_states << "\n";
    out << "Start: " << d.initial << "\n";
    out << "AP: " << d.atoms.size();
    for (const auto& a : d.atoms) out << " \"" << d.ap_names[a.ap] << '@' << (a.agent + 1) << "\"";
    out << "\n";
    out << "acc-name: Rabin " << d.pairs.size() << "\n";
    out << "Acceptance: " << 2 * d.pairs.size() << " ";
    for (size_t i = 0; i < d.pairs.size(); ++i) {
        if (i) out << " | ";
        out << "(Fin(" << 2 * i << ") & Inf(" << 2 * i + 1 << "))";
    }
    out << "\n";
    out << "properties: trans-labels explicit-labels state-acc deterministic complete\n";
    out << "--BODY--\n";
    uint64_t n_val = uint64_t{1} << d.atoms.size();
    for (uint32_t q = 0; q < d.num_states; ++q) {
        out << "State: " << q;
        std::vector<uint32_t> mk;
        for (size_t i = 0; i < d.pairs.size(); ++i) {
            if (d.pairs[i].L[q]) mk.push_back(static_cast<uint32_t>(2 * i));
            if (d.pairs[i].K[q]) mk.push_back(static_cast<uint32_t>(2 * i + 1));
        }
        if (!mk.empty()) {
            out << " {";
            for (size_t i = 0; i < mk.size(); ++i) out << (i ? " " : "") << mk[i];
            out << "}";
        }
        out << "\n";
        // group letters by successor
        std::map<uint32_t, std::vector<char>> groups;
        for (uint64_t v = 0; v < n_val; ++v) {
            uint32_t t = d.trans[q][d.valuation_class[v]];
            auto [it, fresh] = groups.try_emplace(t, std::vector<char>(n_val, 0));
            it->second[v] = 1;
        }
        for (const auto& [target, set] : groups)
            out << "[" << cover_to_label(set, d.atoms.size()) << "] " << target << "\n";
    }
    out << "--END--\n";
}

std::string emit_hoa_text(const Dra& d) {
    std::ostringstream out;
    emit_hoa(d, out);
    return out.str();
}

}  // namespace hypersynth
