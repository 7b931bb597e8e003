#include <doctest.h>

#include "hyperspec.hpp"
#include "testutil.hpp"

using namespace hypersynth;

namespace {

Mdp six_state_model() {
    Mdp m;
    m.num_states = 6;
    m.action_names = {"a", "b"};
    m.ap_names = {"T", "S", "init1"};
    m.enabled.assign(6, {0, 1});
    m.rows.assign(6, {Distribution{{{0, 1.0}}}, Distribution{{{1, 1.0}}}});
    m.labels.assign(6, 0);
    m.labels[5] = 1;       // T
    m.labels[4] = 2;       // S
    m.labels[0] = 4;       // init1
    return m;
}

const char* kMeetSpec =
    "exists (p1 p2)\n"
    "forall x1 in {0} (p1)\n"
    "forall x2 in {1} (p2)\n"
    "Pmax [ F (T@x1 & T@x2) ]\n";

const char* kIsoSpec =
    "exists (p1)\n"
    "forall x1 in {0} (p1)\n"
    "forall x2 in {1} (p1)\n"
    "Pmax [ ((!T@x1 & !T@x2) U (T@x1 & T@x2)) | ((!S@x1 & !S@x2 & !T@x1 & !T@x2) U (S@x1 & S@x2)) ]\n";

}  // namespace

TEST_CASE("meeting specification parses") {
    HyperFormula h = parse_spec(kMeetSpec);
    CHECK(h.policy_vars == std::vector<std::string>{"p1", "p2"});
    REQUIRE(h.agents.size() == 2);
    CHECK(h.agents[0].universal);
    CHECK(h.agents[0].policy_var == "p1");
    REQUIRE(h.constraints.size() == 1);
    CHECK(h.constraints[0].kind == ProbConstraint::Kind::Optimize);
    CHECK(h.constraints[0].maximize);
    CHECK(print_ltl(h.constraints[0].body) == "F (T@x1 & T@x2)");
}

TEST_CASE("iso spec binds two agents to one policy variable") {
    HyperFormula h = parse_spec(kIsoSpec);
    CHECK(h.policy_vars.size() == 1);
    CHECK(h.agents.size() == 2);
    CHECK(h.agents[0].policy_var == "p1");
    CHECK(h.agents[1].policy_var == "p1");
}

TEST_CASE("undeclared policy variable is an error") {
    CHECK_THROWS_AS(parse_spec("exists (p1)\nforall x1 in {0} (p3)\nPmax [ T@x1 ]\n"), SpecError);
}

TEST_CASE("well-formedness report") {
    Mdp m = six_state_model();
    CHECK(check_well_formed(parse_spec(kMeetSpec), m).empty());

    HyperFormula unbound = parse_spec(
        "exists (p1 p2)\nforall x1 in {0} (p1)\nforall x2 in {1} (p2)\nPmax [ F T@x3 ]\n");
    auto report = check_well_formed(unbound, m);
    bool found = false;
    for (const auto& r : report) found = found || r.find("unbound state variable 'x3'") != std::string::npos;
    CHECK(found);

    HyperFormula two_opts = parse_spec(
        "exists (p1 p2)\nforall x1 in {0} (p1)\nforall x2 in {1} (p2)\n"
        "Pmax [ F T@x1 ] & Pmax [ F T@x2 ]\n");
    report = check_well_formed(two_opts, m);
    found = false;
    for (const auto& r : report) found = found || r.find("multiple optimization") != std::string::npos;
    CHECK(found);

    HyperFormula bad_init = parse_spec(
        "exists (p1 p2)\nforall x1 in {77} (p1)\nforall x2 in {1} (p2)\nPmax [ F T@x1 ]\n");
    CHECK(!check_well_formed(bad_init, m).empty());
}

TEST_CASE("quantifier expansion counts leaves") {
    Mdp m = six_state_model();
    {
        Expansion ex = expand_quantifiers(resolve_spec(parse_spec(kMeetSpec)), m);
        CHECK(ex.leaves.size() == 1);
        CHECK(ex.leaves[0].initial_state_of_agent == std::vector<StateId>{0, 1});
        CHECK(ex.leaves[0].agents_of_policy_var.size() == 2);
    }
    {
        HyperFormula h = parse_spec(
            "exists (p1 p2)\nforall x1 in {0, 2} (p1)\nforall x2 in {1, 3} (p2)\n"
            "P >= 0.5 [ F T@x1 & F T@x2 ]\n");
        Expansion ex = expand_quantifiers(resolve_spec(h), m);
        CHECK(ex.leaves.size() == 4);  // product of set sizes
        CHECK(ex.nodes[ex.root].kind == Expansion::Node::Kind::And);
    }
    {
        HyperFormula h = parse_spec(
            "exists (p1 p2)\nexist x1 in {0, 2} (p1)\nforall x2 in {1} (p2)\n"
            "P >= 0.5 [ F T@x1 ]\n");
        Expansion ex = expand_quantifiers(resolve_spec(h), m);
        CHECK(ex.leaves.size() == 2);
        CHECK(ex.nodes[ex.root].kind == Expansion::Node::Kind::Or);
    }
    {
        // optimization over a non-singleton expansion is rejected
        HyperFormula h = parse_spec(
            "exists (p1 p2)\nforall x1 in {0, 2} (p1)\nforall x2 in {1} (p2)\nPmax [ F T@x1 ]\n");
        CHECK_THROWS_AS(expand_quantifiers(resolve_spec(h), m), SpecError);
    }
    {
        // labels resolve to every carrying state
        HyperFormula h = parse_spec(
            "exists (p1 p2)\nforall x1 in {init1} (p1)\nforall x2 in {1} (p2)\nPmax [ F T@x1 ]\n");
        Expansion ex = expand_quantifiers(resolve_spec(h), m);
        CHECK(ex.leaves.size() == 1);
        CHECK(ex.leaves[0].initial_state_of_agent[0] == 0);
    }
}

TEST_CASE("dec fragment detection") {
    CHECK(is_dec_fragment(parse_spec(kMeetSpec)));
    CHECK(!is_dec_fragment(parse_spec(kIsoSpec)));
    // four agents, three policy variables
    HyperFormula noninter = parse_spec(
        "exists (pa pb pc)\n"
        "forall x1 in {0} (pa)\nforall x2 in {0} (pa)\n"
        "forall x3 in {1} (pb)\nforall x4 in {1} (pc)\n"
        "Pmax [ ((!T@x1) U T@x3) ^ ((!T@x2) U T@x4) ]\n");
    CHECK(!is_dec_fragment(noninter));
    // two probability operators break the fragment
    HyperFormula two = parse_spec(
        "exists (p1 p2)\nforall x1 in {0} (p1)\nforall x2 in {1} (p2)\n"
        "P >= 0.1 [ F T@x1 ] & P >= 0.1 [ F T@x2 ]\n");
    CHECK(!is_dec_fragment(two));
}

TEST_CASE("negation normalizes onto comparisons") {
    HyperFormula h = parse_spec(
        "exists (p1 p2)\nforall x1 in {0} (p1)\nforall x2 in {1} (p2)\n"
        "!(P >= 0.5 [ F T@x1 ] & P < 0.2 [ F T@x2 ])\n");
    REQUIRE(h.constraints.size() == 2);
    CHECK(h.constraints[0].cmp == Cmp::Lt);   // negated >=
    CHECK(h.constraints[0].bound == 0.5);
    CHECK(h.constraints[1].cmp == Cmp::Ge);   // negated <
    CHECK(h.body_nodes[h.body_root].kind == BodyNode::Kind::Or);  // De Morgan
    CHECK_THROWS_AS(parse_spec("exists (p1)\nforall x1 in {0} (p1)\n!Pmax [ F T@x1 ]\n"),
                    SpecError);
}

TEST_CASE("reward constraint parses with charged agent") {
    HyperFormula h = parse_spec(
        "exists (p1 p2)\nforall x1 in {0} (p1)\nforall x2 in {1} (p2)\n"
        "Rmin{default@x1} [ (T@x1 & T@x2) | (S@x1 & S@x2) ]\n");
    REQUIRE(h.constraints.size() == 1);
    CHECK(h.constraints[0].kind == ProbConstraint::Kind::RewardOptimize);
    CHECK(!h.constraints[0].maximize);
    CHECK(h.constraints[0].reward_name == "default");
    CHECK(h.constraints[0].reward_agent == "x1");
    // temporal goal events are rejected
    CHECK_THROWS_AS(
        parse_spec("exists (p1)\nforall x1 in {0} (p1)\nRmin [ F T@x1 ]\n"), SpecError);
}

TEST_CASE("spec printing round-trips") {
    for (const char* text : {kMeetSpec, kIsoSpec}) {
        HyperFormula h = parse_spec(text);
        HyperFormula h2 = parse_spec(print_spec(h));
        CHECK(h2.policy_vars == h.policy_vars);
        CHECK(h2.agents.size() == h.agents.size());
        CHECK(h2.constraints.size() == h.constraints.size());
    }
}
