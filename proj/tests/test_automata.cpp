#include <doctest.h>

#include "automata.hpp"
#include "testutil.hpp"

using namespace hypersynth;

namespace {

// dra_accepts_lasso(ltl_to_dra(f), w) must equal eval_on_lasso(f, w)
void check_lasso_agreement(const std::string& formula, int arity, int rounds, uint64_t seed) {
    LtlPtr f = parse_ltl(formula);
    Dra d = ltl_to_dra(f);
    test::Rng rng(seed);
    std::vector<std::string> aps{"a", "b", "c"};
    for (int i = 0; i < rounds; ++i) {
        LassoWord w = test::random_lasso(rng, aps, arity);
        bool expect = eval_on_lasso(f, w);
        CHECK_MESSAGE(dra_accepts_lasso(d, w) == expect,
                      "formula ", formula, " disagrees on a lasso (round ", i, ")");
    }
}

}  // namespace

TEST_CASE("textbook automata for F and G") {
    Nba n = ltl_to_nba(to_nnf(parse_ltl("F a@1")));
    CHECK(n.num_states == 2);  // waiting obligation and the empty set
    n = ltl_to_nba(to_nnf(parse_ltl("G a@1")));
    CHECK(n.num_states == 1);  // self-loop on a, accepting

    Dra d = ltl_to_dra(parse_ltl("F (T@1 & T@2)"));
    CHECK(d.num_states == 2);
    REQUIRE(d.pairs.size() == 1);
    int k_count = 0;
    for (uint32_t q = 0; q < d.num_states; ++q) {
        CHECK(!d.pairs[0].L[q]);
        k_count += d.pairs[0].K[q];
    }
    CHECK(k_count == 1);

    Dra g = ltl_to_dra(parse_ltl("G a@1"));
    CHECK(g.num_states == 2);
}

TEST_CASE("until automaton agrees with the semantic evaluator") {
    check_lasso_agreement("a@1 U b@1", 1, 200, 101);
}

TEST_CASE("determinization handles GF and FG") {
    check_lasso_agreement("G F a@1", 1, 500, 102);
    check_lasso_agreement("F G a@1", 1, 500, 103);
}

TEST_CASE("dra accepts/rejects simple lassos") {
    Dra d = ltl_to_dra(parse_ltl("F a@1"));
    LassoWord w;
    w.ap_names = {"a"};
    w.arity = 1;
    w.loop = {{1}};
    CHECK(dra_accepts_lasso(d, w));

    Dra g = ltl_to_dra(parse_ltl("G a@1"));
    LassoWord w2;
    w2.ap_names = {"a"};
    w2.arity = 1;
    w2.prefix = {{1}};
    w2.loop = {{0}};
    CHECK(!dra_accepts_lasso(g, w2));
}

TEST_CASE("benchmark bodies agree with the evaluator") {
    check_lasso_agreement("F a@1 & F a@2 & G (a@1 -> a@2)", 2, 1000, 104);
    // simultaneous-reach / simultaneous-sink disjunction
    LtlPtr iso = parse_ltl(
        "((!a@1 & !a@2) U (a@1 & a@2)) | ((!b@1 & !b@2 & !a@1 & !a@2) U (b@1 & b@2))");
    Dra d = ltl_to_dra(iso);
    CHECK(d.num_states <= 64);
    test::Rng rng(105);
    std::vector<std::string> aps{"a", "b", "c"};
    for (int i = 0; i < 1000; ++i) {
        LassoWord w = test::random_lasso(rng, aps, 2);
        CHECK(dra_accepts_lasso(d, w) == eval_on_lasso(iso, w));
    }
}

TEST_CASE("random formulas against the evaluator") {
    test::Rng rng(106);
    std::vector<std::string> aps{"a", "b"};
    for (int round = 0; round < 60; ++round) {
        LtlPtr f = test::random_ltl(rng, aps, 2, 3);
        Dra d;
        try {
            d = ltl_to_dra(f);
        } catch (const AutomatonError&) {
            continue;  // cap exceeded on a pathological draw
        }
        for (int i = 0; i < 25; ++i) {
            LassoWord w = test::random_lasso(rng, aps, 2);
            CHECK_MESSAGE(dra_accepts_lasso(d, w) == eval_on_lasso(f, w),
                          "mismatch for ", print_ltl(f));
        }
    }
}

TEST_CASE("determinism: guards partition the letter space") {
    Dra d = ltl_to_dra(parse_ltl("F a@1 & F a@2 & G (a@1 -> a@2)"));
    // every valuation maps to exactly one class and every (state, class) has
    // exactly one successor by construction; check table shapes
    CHECK(d.valuation_class.size() == uint64_t{1} << d.atoms.size());
    for (uint64_t v = 0; v < d.valuation_class.size(); ++v)
        CHECK(d.valuation_class[v] < d.num_classes);
    for (uint32_t q = 0; q < d.num_states; ++q) {
        REQUIRE(d.trans[q].size() == d.num_classes);
        for (uint32_t c = 0; c < d.num_classes; ++c) CHECK(d.trans[q][c] < d.num_states);
    }
}

TEST_CASE("HOA round-trip is isomorphic") {
    for (const char* formula : {"F a@1", "G (a@1 -> b@2)", "a@1 U b@2", "G F a@1"}) {
        LtlPtr f = parse_ltl(formula);
        Dra d = ltl_to_dra(f);
        Dra back = parse_hoa_text(emit_hoa_text(d));
        CHECK(back.num_states == d.num_states);
        CHECK(back.pairs.size() == d.pairs.size());
        // behavioral equivalence on sampled lassos
        test::Rng rng(301);
        std::vector<std::string> aps{"a", "b"};
        for (int i = 0; i < 200; ++i) {
            LassoWord w = test::random_lasso(rng, aps, 2);
            CHECK(dra_accepts_lasso(back, w) == eval_on_lasso(f, w));
        }
    }
}

TEST_CASE("hand-written universal HOA") {
    const char* text =
        "HOA: v1\n"
        "States: 1\n"
        "Start: 0\n"
        "AP: 1 \"a@1\"\n"
        "acc-name: Rabin 1\n"
        "Acceptance: 2 (Fin(0) & Inf(1))\n"
        "--BODY--\n"
        "State: 0 {1}\n"
        "[t] 0\n"
        "--END--\n";
    Dra d = parse_hoa_text(text);
    CHECK(d.num_states == 1);
    LassoWord w;
    w.ap_names = {"a"};
    w.arity = 1;
    w.loop = {{0}};
    CHECK(dra_accepts_lasso(d, w));
}

TEST_CASE("unsupported acceptance is rejected") {
    const char* text =
        "HOA: v1\n"
        "States: 1\n"
        "Start: 0\n"
        "AP: 0\n"
        "acc-name: Buchi\n"
        "Acceptance: 1 Inf(0)\n"
        "--BODY--\n"
        "State: 0 {0}\n"
        "[t] 0\n"
        "--END--\n";
    CHECK_THROWS_AS(parse_hoa_text(text), AutomatonError);
}

TEST_CASE("nondeterministic or partial HOA bodies are rejected") {
    const char* nondet =
        "HOA: v1\nStates: 2\nStart: 0\nAP: 1 \"a@1\"\n"
        "acc-name: Rabin 1\nAcceptance: 2 (Fin(0) & Inf(1))\n--BODY--\n"
        "State: 0\n[t] 0\n[0] 1\nState: 1 {1}\n[t] 1\n--END--\n";
    CHECK_THROWS_AS(parse_hoa_text(nondet), AutomatonError);
    const char* partial =
        "HOA: v1\nStates: 1\nStart: 0\nAP: 1 \"a@1\"\n"
        "acc-name: Rabin 1\nAcceptance: 2 (Fin(0) & Inf(1))\n--BODY--\n"
        "State: 0 {1}\n[0] 0\n--END--\n";
    CHECK_THROWS_AS(parse_hoa_text(partial), AutomatonError);
}
