#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypersynth {

class FormulaError : public std::runtime_error {
public:
    FormulaError(const std::string& what, size_t pos = std::string::npos)
        : std::runtime_error(pos == std::string::npos ? what : what + " (at position " + std::to_string(pos) + ")"),
          position(pos) {}
    size_t position;
};

enum class LtlOp : uint8_t {
    True,
    False,
    Atom,
    Not,
    And,
    Or,
    Xor,
    Implies,
    Next,
    Until,
    Release,
    Eventually,
    Globally,
};

struct LtlNode;
using LtlPtr = std::shared_ptr<const LtlNode>;

/// Immutable LTL AST over atomic propositions tagged with a state variable.
/// Tags are written `ap@k` (positional, 1-based) or `ap@name`; positional tags
/// are resolved immediately, named tags after quantifier elaboration.
struct LtlNode {
    LtlOp op;
    std::string ap;    // Atom only
    std::string tag;   // Atom only: tag as written
    int agent = -1;    // Atom only: resolved 0-based agent index, -1 if unresolved
    LtlPtr lhs, rhs;   // rhs empty for unary ops
};

LtlPtr ltl_true();
LtlPtr ltl_false();
LtlPtr ltl_atom(std::string ap, std::string tag, int agent = -1);
LtlPtr ltl_not(LtlPtr f);
LtlPtr ltl_and(LtlPtr l, LtlPtr r);
LtlPtr ltl_or(LtlPtr l, LtlPtr r);
LtlPtr ltl_xor(LtlPtr l, LtlPtr r);
LtlPtr ltl_implies(LtlPtr l, LtlPtr r);
LtlPtr ltl_next(LtlPtr f);
LtlPtr ltl_until(LtlPtr l, LtlPtr r);
LtlPtr ltl_release(LtlPtr l, LtlPtr r);
LtlPtr ltl_eventually(LtlPtr f);
LtlPtr ltl_globally(LtlPtr f);

bool ltl_equal(const LtlPtr& a, const LtlPtr& b);

/// Parse with precedence: unary > U/R > & > | > xor > ->.
/// U and R associate to the right. Positional tags `@k` resolve to agent k-1;
/// an untagged atom defaults to agent 1. When `declared_aps` is given, any
/// atom outside it is rejected.
LtlPtr parse_ltl(const std::string& text, const std::vector<std::string>* declared_aps = nullptr);

/// Canonical printing; parse_ltl(print_ltl(f)) reproduces f.
std::string print_ltl(const LtlPtr& f);

/// Rewrite named tags to agent indices. Unknown tags raise FormulaError.
LtlPtr resolve_tags(const LtlPtr& f, const std::vector<std::string>& state_vars);

/// Names of tags that are still unresolved (agent < 0).
std::set<std::string> unresolved_tags(const LtlPtr& f);

/// Highest referenced agent index + 1 (0 for constant formulas).
int formula_arity(const LtlPtr& f);

/// All (ap, agent) pairs occurring in the formula.
std::vector<std::pair<std::string, int>> tagged_atoms(const LtlPtr& f);

bool is_propositional(const LtlPtr& f);

/// Negation normal form: negations only at atoms; Until/Release duals used,
/// xor and -> expanded, F/G kept.
LtlPtr to_nnf(const LtlPtr& f);

/// Desugar to the core fragment {literal, and, or, X, U, R} in NNF.
LtlPtr to_core_nnf(const LtlPtr& f);

/// Ultimately periodic word: prefix then loop repeated forever. Each letter
/// assigns one AP set per agent; AP sets are bitmasks over `ap_names`.
struct LassoWord {
    std::vector<std::string> ap_names;
    int arity = 1;
    std::vector<std::vector<uint64_t>> prefix;
    std::vector<std::vector<uint64_t>> loop;  // non-empty

    size_t positions() const { return prefix.size() + loop.size(); }
};

/// Exact LTL satisfaction on an ultimately periodic word via fixpoint
/// iteration over (subformula, position). Independent of the automata path;
/// serves as the semantic oracle. Atoms whose agent index is outside the
/// word's arity raise FormulaError; APs missing from the word are false.
bool eval_on_lasso(const LtlPtr& f, const LassoWord& w);

}  // namespace hypersynth
