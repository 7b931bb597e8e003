#include <doctest.h>

#include "ltl.hpp"
#include "testutil.hpp"

using namespace hypersynth;

TEST_CASE("parser builds the expected shapes") {
    LtlPtr f = parse_ltl("F (T@1 & T@2)");
    REQUIRE(f->op == LtlOp::Eventually);
    REQUIRE(f->lhs->op == LtlOp::And);
    CHECK(f->lhs->lhs->ap == "T");
    CHECK(f->lhs->lhs->agent == 0);
    CHECK(f->lhs->rhs->agent == 1);

    f = parse_ltl("(!T@1) U T@2");
    REQUIRE(f->op == LtlOp::Until);
    CHECK(f->lhs->op == LtlOp::Not);
    CHECK(f->rhs->agent == 1);

    f = parse_ltl("G (T@1 -> T@2)");
    REQUIRE(f->op == LtlOp::Globally);
    CHECK(f->lhs->op == LtlOp::Implies);
}

TEST_CASE("precedence: unary > U > & > | > xor > ->") {
    LtlPtr f = parse_ltl("a@1 U b@1 & c@1");
    CHECK(f->op == LtlOp::And);  // (a U b) & c
    CHECK(f->lhs->op == LtlOp::Until);
    f = parse_ltl("a@1 | b@1 xor c@1");
    CHECK(f->op == LtlOp::Xor);
    f = parse_ltl("a@1 xor b@1 -> c@1");
    CHECK(f->op == LtlOp::Implies);
    f = parse_ltl("a@1 U b@1 U c@1");  // right-assoc
    CHECK(f->op == LtlOp::Until);
    CHECK(f->rhs->op == LtlOp::Until);
}

TEST_CASE("parser reports positions and unknown APs") {
    CHECK_THROWS_AS(parse_ltl("F ("), FormulaError);
    CHECK_THROWS_AS(parse_ltl("a@1 &"), FormulaError);
    CHECK_THROWS_AS(parse_ltl("a@0"), FormulaError);
    std::vector<std::string> aps{"a", "b"};
    CHECK_THROWS_AS(parse_ltl("c@1", &aps), FormulaError);
    CHECK_NOTHROW(parse_ltl("a@1 & b@2", &aps));
}

TEST_CASE("print/parse round-trip") {
    test::Rng rng(11);
    std::vector<std::string> aps{"a", "b", "c"};
    for (int i = 0; i < 200; ++i) {
        LtlPtr f = test::random_ltl(rng, aps, 2, 4);
        LtlPtr g = parse_ltl(print_ltl(f));
        CHECK(ltl_equal(f, g));
    }
}

TEST_CASE("nnf dualities") {
    LtlPtr f = to_nnf(parse_ltl("!F a@1"));
    CHECK(print_ltl(f) == "G !a@1");
    f = to_nnf(parse_ltl("!(a@1 U b@1)"));
    CHECK(print_ltl(f) == "!a@1 R !b@1");
    f = to_nnf(parse_ltl("!G a@1"));
    CHECK(print_ltl(f) == "F !a@1");
}

TEST_CASE("lasso evaluation basics") {
    LassoWord w;
    w.ap_names = {"a", "b"};
    w.arity = 1;
    w.loop = {{1}};  // {a} forever
    CHECK(eval_on_lasso(parse_ltl("G a@1"), w));
    CHECK(!eval_on_lasso(parse_ltl("F b@1"), w));

    LassoWord w2;
    w2.ap_names = {"a", "b"};
    w2.arity = 1;
    w2.prefix = {{1}};  // {a}
    w2.loop = {{0}};    // {}
    CHECK(!eval_on_lasso(parse_ltl("F b@1"), w2));
    CHECK(eval_on_lasso(parse_ltl("a@1"), w2));
    CHECK(!eval_on_lasso(parse_ltl("X a@1"), w2));
}

TEST_CASE("lasso evaluation arity errors") {
    LassoWord w;
    w.ap_names = {"a"};
    w.arity = 1;
    w.loop = {{1}};
    CHECK_THROWS_AS(eval_on_lasso(parse_ltl("a@2"), w), FormulaError);
}

TEST_CASE("nnf preserves lasso semantics on random formulas") {
    test::Rng rng(23);
    std::vector<std::string> aps{"a", "b"};
    for (int i = 0; i < 150; ++i) {
        LtlPtr f = test::random_ltl(rng, aps, 2, 5);
        LtlPtr g = to_nnf(f);
        LtlPtr h = to_core_nnf(f);
        for (int k = 0; k < 12; ++k) {
            LassoWord w = test::random_lasso(rng, aps, 2);
            bool expect = eval_on_lasso(f, w);
            CHECK(eval_on_lasso(g, w) == expect);
            CHECK(eval_on_lasso(h, w) == expect);
        }
    }
}

TEST_CASE("fixpoint evaluator agrees with direct-scan reference") {
    test::Rng rng(31);
    std::vector<std::string> aps{"a", "b"};
    for (int i = 0; i < 120; ++i) {
        LtlPtr f = test::random_ltl(rng, aps, 2, 5);
        for (int k = 0; k < 10; ++k) {
            LassoWord w = test::random_lasso(rng, aps, 2);
            CHECK(eval_on_lasso(f, w) == test::lasso_reference_eval(f, w));
        }
    }
}

TEST_CASE("lasso dualities hold pointwise") {
    test::Rng rng(37);
    std::vector<std::string> aps{"a", "b"};
    for (int i = 0; i < 80; ++i) {
        LtlPtr f = test::random_ltl(rng, aps, 1, 3);
        LtlPtr g = test::random_ltl(rng, aps, 1, 3);
        LassoWord w = test::random_lasso(rng, aps, 1);
        CHECK(eval_on_lasso(ltl_not(ltl_next(f)), w) == eval_on_lasso(ltl_next(ltl_not(f)), w));
        CHECK(eval_on_lasso(ltl_not(ltl_until(f, g)), w) ==
              eval_on_lasso(ltl_release(ltl_not(f), ltl_not(g)), w));
    }
}

TEST_CASE("tag resolution") {
    LtlPtr f = parse_ltl("T@x1 & T@x2");
    CHECK(unresolved_tags(f) == std::set<std::string>{"x1", "x2"});
    LtlPtr r = resolve_tags(f, {"x1", "x2"});
    CHECK(unresolved_tags(r).empty());
    CHECK(formula_arity(r) == 2);
    CHECK_THROWS_AS(resolve_tags(parse_ltl("T@zz"), {"x1"}), FormulaError);
}
