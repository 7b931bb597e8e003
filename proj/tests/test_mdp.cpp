#include <doctest.h>

#include "mdp.hpp"
#include "testutil.hpp"

using namespace hypersynth;

namespace {

Mdp two_state_toggle() {
    // s0: a -> s1, b -> s0; s1: a -> s1
    Mdp m;
    m.num_states = 2;
    m.action_names = {"a", "b"};
    m.ap_names = {"goal"};
    m.enabled = {{0, 1}, {0}};
    m.rows = {{Distribution{{{1, 1.0}}}, Distribution{{{0, 1.0}}}}, {Distribution{{{1, 1.0}}}}};
    m.labels = {0, 1};
    return m;
}

}  // namespace

TEST_CASE("validate accepts a 1-state self-loop") {
    Mdp m;
    m.num_states = 1;
    m.action_names = {"a"};
    m.enabled = {{0}};
    m.rows = {{Distribution{{{0, 1.0}}}}};
    m.labels = {0};
    CHECK(validate_mdp(m).empty());
}

TEST_CASE("validate flags row-sum violations") {
    Mdp m = two_state_toggle();
    m.rows[0][0].support[0].prob = 0.9;
    auto report = validate_mdp(m);
    REQUIRE(!report.empty());
    bool found = false;
    for (const auto& r : report) found = found || r.find("row-sum violation at (s0,a)") != std::string::npos;
    CHECK(found);
}

TEST_CASE("validate flags dead states") {
    Mdp m = two_state_toggle();
    m.num_states = 3;
    m.enabled.push_back({});
    m.rows.push_back({});
    m.labels.push_back(0);
    auto report = validate_mdp(m);
    bool found = false;
    for (const auto& r : report) found = found || r.find("dead state 2") != std::string::npos;
    CHECK(found);
}

TEST_CASE("induce_mc selects the chosen rows") {
    Mdp m = two_state_toggle();
    MemorylessPolicy p;
    p.choice = {0, 0};  // a everywhere
    Mdp mc = induce_mc(m, p);
    CHECK(mc.is_markov_chain());
    CHECK(mc.rows[0][0].support[0].target == 1);
    CHECK(mc.rows[0][0].support[0].prob == 1.0);
    CHECK(mc.labels == m.labels);
}

TEST_CASE("induce_mc rejects undefined and disabled choices") {
    Mdp m = two_state_toggle();
    MemorylessPolicy undefined;
    undefined.choice = {0, kNoAction};
    CHECK_THROWS_AS(induce_mc(m, undefined), ModelError);
    MemorylessPolicy disabled;
    disabled.choice = {1, 1};  // b not enabled in s1
    CHECK_THROWS_AS(induce_mc(m, disabled), ModelError);
}

TEST_CASE("induced chains match row selection entry-wise on random models") {
    test::Rng rng(7);
    for (int round = 0; round < 30; ++round) {
        Mdp m = test::random_mdp(rng, 4, 3, {"x", "y"});
        REQUIRE(validate_mdp(m).empty());
        MemorylessPolicy p;
        p.choice.resize(m.num_states);
        for (StateId s = 0; s < m.num_states; ++s) {
            std::uniform_int_distribution<size_t> pick(0, m.enabled[s].size() - 1);
            p.choice[s] = m.enabled[s][pick(rng)];
        }
        Mdp mc = induce_mc(m, p);
        REQUIRE(validate_mdp(mc).empty());
        for (StateId s = 0; s < m.num_states; ++s) {
            int k = m.enabled_index(s, p.choice[s]);
            CHECK(mc.rows[s][0] == m.rows[s][static_cast<size_t>(k)]);
            CHECK(std::abs(mc.rows[s][0].sum() - 1.0) <= kRowSumTolerance);
        }
    }
}

TEST_CASE("model text round-trips") {
    Mdp m = two_state_toggle();
    m.rewards = RewardStructure{};
    m.rewards->values = {{1.0, 0.5}, {0.0}};
    std::string text = emit_model_text(m);
    Mdp back = parse_model_text(text);
    CHECK(back.num_states == m.num_states);
    CHECK(back.action_names == m.action_names);
    CHECK(back.labels == m.labels);
    CHECK(back.enabled == m.enabled);
    REQUIRE(back.rewards.has_value());
    CHECK(back.rewards->values[0][0] == 1.0);
    CHECK(back.rewards->values[0][1] == 0.5);
}

TEST_CASE("model parser reads rationals and reports malformed input") {
    Mdp m = parse_model_text(
        "states 2\n"
        "actions a\n"
        "ap g\n"
        "0 a 0 1/3\n"
        "0 a 1 2/3\n"
        "1 a 1 1\n"
        "label 1 g\n");
    CHECK(m.rows[0][0].support[0].prob == doctest::Approx(1.0 / 3).epsilon(1e-15));
    CHECK_THROWS_AS(parse_model_text("states 1\nactions a\n0 zz 0 1\n"), ModelError);
    CHECK_THROWS_AS(parse_model_text("actions a\n0 a 0 1\n"), ModelError);
    CHECK_THROWS_AS(parse_model_text("states 1\nactions a\nlabel 0 undeclared\n"), ModelError);
}

TEST_CASE("uniform chain averages rows") {
    Mdp m = two_state_toggle();
    Mdp u = uniform_chain(m);
    CHECK(u.is_markov_chain());
    // s0 averages a (to s1) and b (to s0)
    REQUIRE(u.rows[0][0].support.size() == 2);
    CHECK(u.rows[0][0].support[0].prob == doctest::Approx(0.5));
    CHECK(u.rows[0][0].support[1].prob == doctest::Approx(0.5));
}
