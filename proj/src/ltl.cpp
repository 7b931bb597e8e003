#include "ltl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>

namespace hypersynth {

namespace {

LtlPtr make(LtlOp op, LtlPtr l = nullptr, LtlPtr r = nullptr) {
    auto n = std::make_shared<LtlNode>();
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
}

}  // namespace

LtlPtr ltl_true() { return make(LtlOp::True); }
LtlPtr ltl_false() { return make(LtlOp::False); }

LtlPtr ltl_atom(std::string ap, std::string tag, int agent) {
    auto n = std::make_shared<LtlNode>();
    n->op = LtlOp::Atom;
    n->ap = std::move(ap);
    n->tag = std::move(tag);
    n->agent = agent;
    return n;
}

LtlPtr ltl_not(LtlPtr f) { return make(LtlOp::Not, std::move(f)); }
LtlPtr ltl_and(LtlPtr l, LtlPtr r) { return make(LtlOp::And, std::move(l), std::move(r)); }
LtlPtr ltl_or(LtlPtr l, LtlPtr r) { return make(LtlOp::Or, std::move(l), std::move(r)); }
LtlPtr ltl_xor(LtlPtr l, LtlPtr r) { return make(LtlOp::Xor, std::move(l), std::move(r)); }
LtlPtr ltl_implies(LtlPtr l, LtlPtr r) { return make(LtlOp::Implies, std::move(l), std::move(r)); }
LtlPtr ltl_next(LtlPtr f) { return make(LtlOp::Next, std::move(f)); }
LtlPtr ltl_until(LtlPtr l, LtlPtr r) { return make(LtlOp::Until, std::move(l), std::move(r)); }
LtlPtr ltl_release(LtlPtr l, LtlPtr r) { return make(LtlOp::Release, std::move(l), std::move(r)); }
LtlPtr ltl_eventually(LtlPtr f) { return make(LtlOp::Eventually, std::move(f)); }
LtlPtr ltl_globally(LtlPtr f) { return make(LtlOp::Globally, std::move(f)); }

bool ltl_equal(const LtlPtr& a, const LtlPtr& b) {
    if (a == b) return true;
    if (!a || !b || a->op != b->op) return false;
    if (a->op == LtlOp::Atom)
        return a->ap == b->ap && a->agent == b->agent && a->tag == b->tag;
    if (a->lhs && !ltl_equal(a->lhs, b->lhs)) return false;
    if (a->rhs && !ltl_equal(a->rhs, b->rhs)) return false;
    return (a->lhs == nullptr) == (b->lhs == nullptr) && (a->rhs == nullptr) == (b->rhs == nullptr);
}

// --- parser ----------------------------------------------------------------

namespace {

struct Parser {
    const std::string& text;
    const std::vector<std::string>* declared;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eat(const std::string& s) {
        skip_ws();
        if (text.compare(pos, s.size(), s) == 0) {
            // keywords must not run into identifier characters
            if (std::isalpha(static_cast<unsigned char>(s[0]))) {
                size_t end = pos + s.size();
                if (end < text.size() &&
                    (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_'))
                    return false;
            }
            pos += s.size();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) { throw FormulaError(msg, pos); }

    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos) fail("expected identifier");
        return text.substr(start, pos - start);
    }

    LtlPtr atom() {
        std::string ap = ident();
        std::string tag;
        int agent = -1;
        if (pos < text.size() && text[pos] == '@') {
            ++pos;
            tag = ident();
        } else {
            tag = "1";
        }
        if (!tag.empty() && std::all_of(tag.begin(), tag.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
            int k = std::stoi(tag);
            if (k < 1) fail("positional tag must be >= 1");
            agent = k - 1;
        }
        if (declared && std::find(declared->begin(), declared->end(), ap) == declared->end())
            fail("unknown atomic proposition '" + ap + "'");
        return ltl_atom(std::move(ap), std::move(tag), agent);
    }

    LtlPtr unary() {
        skip_ws();
        if (eat("(")) {
            LtlPtr f = implies_level();
            skip_ws();
            if (!eat(")")) fail("expected ')'");
            return f;
        }
        if (eat("!")) return ltl_not(unary());
        if (eat("X")) return ltl_next(unary());
        if (eat("F")) return ltl_eventually(unary());
        if (eat("G")) return ltl_globally(unary());
        if (eat("true")) return ltl_true();
        if (eat("false")) return ltl_false();
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of formula");
        if (!std::isalpha(static_cast<unsigned char>(text[pos])) && text[pos] != '_')
            fail("unexpected character '" + std::string(1, text[pos]) + "'");
        return atom();
    }

    LtlPtr until_level() {
        LtlPtr lhs = unary();
        skip_ws();
        if (eat("U")) return ltl_until(std::move(lhs), until_level());
        if (eat("R")) return ltl_release(std::move(lhs), until_level());
        return lhs;
    }

    LtlPtr and_level() {
        LtlPtr f = until_level();
        while (eat("&")) f = ltl_and(std::move(f), until_level());
        return f;
    }

    LtlPtr or_level() {
        LtlPtr f = and_level();
        while (true) {
            skip_ws();
            // '|' but not part of '||' misuse; plain single char here
            if (eat("|")) {
                f = ltl_or(std::move(f), and_level());
            } else {
                return f;
            }
        }
    }

    LtlPtr xor_level() {
        LtlPtr f = or_level();
        while (eat("xor") || eat("^")) f = ltl_xor(std::move(f), or_level());
        return f;
    }

    LtlPtr implies_level() {
        LtlPtr f = xor_level();
        skip_ws();
        if (eat("->")) return ltl_implies(std::move(f), implies_level());
        return f;
    }
};

}  // namespace

LtlPtr parse_ltl(const std::string& text, const std::vector<std::string>* declared_aps) {
    Parser p{text, declared_aps};
    LtlPtr f = p.implies_level();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input after formula");
    return f;
}

namespace {

int precedence(LtlOp op) {
    switch (op) {
        case LtlOp::Implies: return 0;
        case LtlOp::Xor: return 1;
        case LtlOp::Or: return 2;
        case LtlOp::And: return 3;
        case LtlOp::Until:
        case LtlOp::Release: return 4;
        default: return 5;
    }
}

void print_rec(const LtlPtr& f, int parent_prec, std::string& out) {
    int prec = precedence(f->op);
    auto wrap = prec < parent_prec || (prec == parent_prec && prec <= 4);
    auto binary = [&](const char* sym) {
        if (wrap) out += '(';
        print_rec(f->lhs, prec == 4 ? 5 : prec + 1, out);  // U/R right-assoc: left side tighter
        out += sym;
        print_rec(f->rhs, prec, out);
        if (wrap) out += ')';
    };
    switch (f->op) {
        case LtlOp::True: out += "true"; break;
        case LtlOp::False: out += "false"; break;
        case LtlOp::Atom:
            out += f->ap;
            out += '@';
            out += f->tag.empty() ? std::to_string(f->agent + 1) : f->tag;
            break;
        case LtlOp::Not: out += '!'; print_rec(f->lhs, 5, out); break;
        case LtlOp::Next: out += "X "; print_rec(f->lhs, 5, out); break;
        case LtlOp::Eventually: out += "F "; print_rec(f->lhs, 5, out); break;
        case LtlOp::Globally: out += "G "; print_rec(f->lhs, 5, out); break;
        case LtlOp::And: binary(" & "); break;
        case LtlOp::Or: binary(" | "); break;
        case LtlOp::Xor: binary(" xor "); break;
        case LtlOp::Implies: binary(" -> "); break;
        case LtlOp::Until: binary(" U "); break;
        case LtlOp::Release: binary(" R "); break;
    }
}

}  // namespace

std::string print_ltl(const LtlPtr& f) {
    std::string out;
    print_rec(f, 0, out);
    return out;
}

LtlPtr resolve_tags(const LtlPtr& f, const std::vector<std::string>& state_vars) {
    if (!f) return f;
    if (f->op == LtlOp::Atom) {
        if (f->agent >= 0) return f;
        auto it = std::find(state_vars.begin(), state_vars.end(), f->tag);
        if (it == state_vars.end())
            throw FormulaError("unbound state variable '" + f->tag + "'");
        int idx = static_cast<int>(it - state_vars.begin());
        return ltl_atom(f->ap, std::to_string(idx + 1), idx);
    }
    auto n = std::make_shared<LtlNode>(*f);
    if (f->lhs) n->lhs = resolve_tags(f->lhs, state_vars);
    if (f->rhs) n->rhs = resolve_tags(f->rhs, state_vars);
    return n;
}

std::set<std::string> unresolved_tags(const LtlPtr& f) {
    std::set<std::string> out;
    std::function<void(const LtlPtr&)> walk = [&](const LtlPtr& n) {
        if (!n) return;
        if (n->op == LtlOp::Atom && n->agent < 0) out.insert(n->tag);
        walk(n->lhs);
        walk(n->rhs);
    };
    walk(f);
    return out;
}

int formula_arity(const LtlPtr& f) {
    int arity = 0;
    std::function<void(const LtlPtr&)> walk = [&](const LtlPtr& n) {
        if (!n) return;
        if (n->op == LtlOp::Atom) arity = std::max(arity, n->agent + 1);
        walk(n->lhs);
        walk(n->rhs);
    };
    walk(f);
    return arity;
}

std::vector<std::pair<std::string, int>> tagged_atoms(const LtlPtr& f) {
    std::vector<std::pair<std::string, int>> out;
    std::function<void(const LtlPtr&)> walk = [&](const LtlPtr& n) {
        if (!n) return;
        if (n->op == LtlOp::Atom) {
            std::pair<std::string, int> key{n->ap, n->agent};
            if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
        }
        walk(n->lhs);
        walk(n->rhs);
    };
    walk(f);
    std::sort(out.begin(), out.end());
    return out;
}

bool is_propositional(const LtlPtr& f) {
    if (!f) return true;
    switch (f->op) {
        case LtlOp::Next:
        case LtlOp::Until:
        case LtlOp::Release:
        case LtlOp::Eventually:
        case LtlOp::Globally: return false;
        default: return is_propositional(f->lhs) && is_propositional(f->rhs);
    }
}

namespace {

LtlPtr nnf(const LtlPtr& f, bool neg) {
    switch (f->op) {
        case LtlOp::True: return neg ? ltl_false() : ltl_true();
        case LtlOp::False: return neg ? ltl_true() : ltl_false();
        case LtlOp::Atom: return neg ? ltl_not(f) : f;
        case LtlOp::Not: return nnf(f->lhs, !neg);
        case LtlOp::And:
            return neg ? ltl_or(nnf(f->lhs, true), nnf(f->rhs, true))
                       : ltl_and(nnf(f->lhs, false), nnf(f->rhs, false));
        case LtlOp::Or:
            return neg ? ltl_and(nnf(f->lhs, true), nnf(f->rhs, true))
                       : ltl_or(nnf(f->lhs, false), nnf(f->rhs, false));
        case LtlOp::Implies: return nnf(ltl_or(ltl_not(f->lhs), f->rhs), neg);
        case LtlOp::Xor:
            // a xor b == (a & !b) | (!a & b)
            return nnf(ltl_or(ltl_and(f->lhs, ltl_not(f->rhs)), ltl_and(ltl_not(f->lhs), f->rhs)), neg);
        case LtlOp::Next: return ltl_next(nnf(f->lhs, neg));
        case LtlOp::Eventually: return neg ? ltl_globally(nnf(f->lhs, true)) : ltl_eventually(nnf(f->lhs, false));
        case LtlOp::Globally: return neg ? ltl_eventually(nnf(f->lhs, true)) : ltl_globally(nnf(f->lhs, false));
        case LtlOp::Until:
            return neg ? ltl_release(nnf(f->lhs, true), nnf(f->rhs, true))
                       : ltl_until(nnf(f->lhs, false), nnf(f->rhs, false));
        case LtlOp::Release:
            return neg ? ltl_until(nnf(f->lhs, true), nnf(f->rhs, true))
                       : ltl_release(nnf(f->lhs, false), nnf(f->rhs, false));
    }
    throw FormulaError("corrupt formula node");
}

}  // namespace

LtlPtr to_nnf(const LtlPtr& f) { return nnf(f, false); }

LtlPtr to_core_nnf(const LtlPtr& f) {
    LtlPtr n = to_nnf(f);
    std::function<LtlPtr(const LtlPtr&)> core = [&](const LtlPtr& g) -> LtlPtr {
        switch (g->op) {
            case LtlOp::Eventually: return ltl_until(ltl_true(), core(g->lhs));
            case LtlOp::Globally: return ltl_release(ltl_false(), core(g->lhs));
            default: {
                if (!g->lhs) return g;
                auto out = std::make_shared<LtlNode>(*g);
                out->lhs = core(g->lhs);
                if (g->rhs) out->rhs = core(g->rhs);
                return out;
            }
        }
    };
    return core(n);
}

// --- lasso evaluation --------------------------------------------------------

namespace {

struct LassoEval {
    const LassoWord& w;
    size_t n;                   // positions
    std::vector<uint64_t> letters_flat;  // n * arity masks
    std::map<std::string, int> ap_bit;

    explicit LassoEval(const LassoWord& word) : w(word), n(word.positions()) {
        if (w.loop.empty()) throw FormulaError("lasso loop must be non-empty");
        letters_flat.reserve(n * w.arity);
        auto push = [&](const std::vector<uint64_t>& letter) {
            if (static_cast<int>(letter.size()) != w.arity)
                throw FormulaError("lasso letter arity mismatch");
            for (uint64_t m : letter) letters_flat.push_back(m);
        };
        for (const auto& l : w.prefix) push(l);
        for (const auto& l : w.loop) push(l);
        for (size_t i = 0; i < w.ap_names.size(); ++i) ap_bit[w.ap_names[i]] = static_cast<int>(i);
    }

    size_t succ(size_t i) const { return i + 1 < n ? i + 1 : w.prefix.size(); }

    std::vector<char> eval(const LtlPtr& f) {
        std::vector<char> v(n, 0);
        switch (f->op) {
            case LtlOp::True: v.assign(n, 1); break;
            case LtlOp::False: break;
            case LtlOp::Atom: {
                if (f->agent < 0 || f->agent >= w.arity)
                    throw FormulaError("atom agent index outside word arity: " + f->ap + "@" + f->tag);
                auto it = ap_bit.find(f->ap);
                if (it == ap_bit.end()) break;  // unknown AP: never holds
                uint64_t bit = uint64_t{1} << it->second;
                for (size_t i = 0; i < n; ++i)
                    v[i] = (letters_flat[i * w.arity + f->agent] & bit) ? 1 : 0;
                break;
            }
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
                std::vector<char> a;
                if (f->op == LtlOp::Until) a = eval(f->lhs);
                // least fixpoint of v = b | (a & v o succ)
                v = b;
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (size_t ii = n; ii-- > 0;) {
                        char nv = b[ii] || ((f->op == LtlOp::Eventually || a[ii]) && v[succ(ii)]);
                        if (nv != v[ii]) {
                            v[ii] = nv;
                            changed = true;
                        }
                    }
                }
                break;
            }
            case LtlOp::Release:
            case LtlOp::Globally: {
                auto b = eval(f->op == LtlOp::Release ? f->rhs : f->lhs);
                std::vector<char> a;
                if (f->op == LtlOp::Release) a = eval(f->lhs);
                // greatest fixpoint of v = b & (a | v o succ)
                v = b;
                bool changed = true;
                while (changed) {
                    changed = false;
                    for (size_t ii = n; ii-- > 0;) {
                        char nv = b[ii] && ((f->op == LtlOp::Globally ? 0 : a[ii]) || v[succ(ii)]);
                        if (nv != v[ii]) {
                            v[ii] = nv;
                            changed = true;
                        }
                    }
                }
                break;
            }
        }
        return v;
    }
};

}  // namespace

bool eval_on_lasso(const LtlPtr& f, const LassoWord& w) {
    LassoEval ev(w);
    return ev.eval(f)[0] != 0;
}

}  // namespace hypersynth
