#include <doctest.h>

#include "golden_util.hpp"
#include "pencil/puzzle.hpp"
#include "pencil/qbf.hpp"
#include "pencil/reduction.hpp"
#include "pencil/sat.hpp"

using namespace pencil;

namespace {

// Feeds the response token by token and records the live context (without
// the prompt) right before and after each reduction.
struct Replay {
    std::vector<std::string> generated, reduced;
    std::string final_context;
};

Replay replay(const TaskTrace& t) {
    Replay r;
    TokenSeq ctx = t.prompt;
    const std::size_t n = t.prompt.size();
    for (Token tok : t.response) {
        ctx.push_back(tok);
        if (tok != kReturn) continue;
        r.generated.push_back(to_string(ctx, n, ctx.size()));
        ctx = reduce(ctx);
        r.reduced.push_back(to_string(ctx, n, ctx.size()));
    }
    r.final_context = to_string(ctx, n, ctx.size());
    return r;
}

void check_against_steps(const TaskTrace& t, const std::string& steps_file) {
    auto steps = golden::read_steps(steps_file);
    auto r = replay(t);
    REQUIRE(r.generated.size() == steps.generated.size());
    for (std::size_t k = 0; k < steps.generated.size(); ++k) {
        CAPTURE(k + 1);
        CHECK(r.generated[k] == steps.generated[k]);
        CHECK(r.reduced[k] == steps.reduced[k]);
    }
    CHECK(r.final_context == steps.final_response);
}

void check_oracle_run(const TaskTrace& t, std::size_t expected_reductions) {
    auto run = run_pencil(make_oracle_predictor(t.scaffold(), t.prompt.size()), t.prompt);
    CHECK(run.terminated);
    CHECK(run.reductions == expected_reductions);
    CHECK(scaffold(run, t.prompt) == t.scaffold());
}

std::size_t count(const TokenSeq& s, Token t) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), t)); }

}  // namespace

TEST_CASE("SAT chain-of-thought trace matches the recorded example") {
    auto f = parse_sat_prompt(golden::read("sat_cot_prompt.txt"));
    CHECK(f.n_vars == 4);
    CHECK(f.clauses.size() == 17);
    auto t = dpll_trace(f);
    CHECK(to_string(t.prompt) == golden::read("sat_cot_prompt.txt"));
    CHECK(to_string(t.response) == golden::read("sat_cot_response.txt"));
    CHECK_FALSE(t.answer);
    CHECK_FALSE(brute_force_sat(f));
    check_oracle_run(t, 11);
    auto run = run_pencil(make_oracle_predictor(t.scaffold(), t.prompt.size()), t.prompt);
    CHECK(to_string(run.final_context, t.prompt.size(), run.final_context.size()) ==
          golden::read("sat_pencil_response.txt"));
}

TEST_CASE("SAT reasoning steps match the recorded internal-thinking run") {
    auto steps = golden::read_steps("sat_steps.txt");
    const std::string& g = steps.generated.front();
    const std::string head = "[CALL] Question: ";
    REQUIRE(g.rfind(head, 0) == 0);
    auto formula_text = g.substr(head.size(), g.find(" Try") - head.size());
    auto f = parse_sat_prompt(formula_text);
    auto t = dpll_trace(f);
    CHECK(t.answer);
    CHECK(brute_force_sat(f));
    check_against_steps(t, "sat_steps.txt");
    check_oracle_run(t, 5);
}

TEST_CASE("QBF trace matches the recorded example and its reasoning steps") {
    auto f = parse_qbf_prompt(golden::read("qbf_cot_prompt.txt"));
    CHECK(f.prefix.size() == 4);
    CHECK(f.clauses.size() == 8);
    auto t = qbf_trace(f);
    CHECK(to_string(t.prompt) == golden::read("qbf_cot_prompt.txt"));
    CHECK(to_string(t.response) == golden::read("qbf_cot_response.txt"));
    CHECK(t.answer);
    CHECK(brute_force_qbf(f));
    check_against_steps(t, "qbf_steps.txt");
    check_oracle_run(t, 25);
}

TEST_CASE("puzzle trace matches the recorded example") {
    auto p = parse_puzzle_prompt(golden::read("puzzle_cot_prompt.txt"));
    CHECK(p.houses == 3);
    CHECK(p.categories == 3);
    auto t = puzzle_trace(p);
    CHECK(to_string(t.prompt) == golden::read("puzzle_cot_prompt.txt"));
    CHECK(to_string(t.response) == golden::read("puzzle_cot_response.txt"));
    CHECK(t.fish_owner == "Brit");
    CHECK(t.fish_house == 3);
    auto sols = brute_force_puzzle(p);
    REQUIRE(sols.size() == 1);
    CHECK(sols[0] == *t.solution);
    auto run = run_pencil(make_oracle_predictor(t.scaffold(), t.prompt.size()), t.prompt);
    CHECK(to_string(run.final_context, t.prompt.size(), run.final_context.size()) ==
          golden::read("puzzle_pencil_response.txt"));
}

TEST_CASE("puzzle reasoning steps match the recorded internal-thinking run") {
    auto p = parse_puzzle_prompt(
        "Constraint#1 : the one who keeps Fish is immediately to the right of the Red house "
        "Constraint#2 : the Green house is immediately to the left of the Red house "
        "Constraint#3 : the one who keeps Fish is immediately to the right of the Swede "
        "Constraint#4 : the Brit is immediately to the left of the one who keeps Birds");
    auto t = puzzle_trace(p);
    CHECK(t.fish_owner == "German");
    check_against_steps(t, "puzzle_steps.txt");
    check_oracle_run(t, 12);
    auto sols = brute_force_puzzle(p);
    REQUIRE(sols.size() == 1);
    CHECK(sols[0] == *t.solution);
}

TEST_CASE("prompts round-trip through their parsers") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto f = gen_sat(5, seed);
        CHECK(parse_sat_prompt(to_string(sat_prompt(f)), 5) == f);
        auto q = gen_qbf(5, seed);
        CHECK(parse_qbf_prompt(to_string(qbf_prompt(q))) == q);
        auto p = gen_puzzle(3 + int(seed % 2), 3 + int(seed % 2), seed);
        CHECK(parse_puzzle_prompt(to_string(puzzle_prompt(p)), p.houses, p.categories) == p);
    }
}

TEST_CASE("malformed instances are rejected") {
    CHECK_THROWS_AS(parse_sat_prompt("( 1 ∨ x )"), TaskError);
    CHECK_THROWS_AS(parse_sat_prompt("( 1 ∨ 2"), TaskError);
    CHECK_THROWS_AS(validate(CnfFormula{2, {{1, 3}}}), TaskError);
    CHECK_THROWS_AS(parse_qbf_prompt("∀ 1 ∀ 1 : #1 ( 1 )"), TaskError);
    CHECK_THROWS_AS(parse_qbf_prompt("∀ 1 : #1 ( 2 )"), TaskError);
    CHECK_THROWS_AS(parse_puzzle_prompt("Constraint#1 : the Purple house is the same house as the Brit"), TaskError);
    CHECK_THROWS_AS(gen_sat(2, 0), TaskError);
    CHECK_THROWS_AS(gen_puzzle(6, 3, 0), TaskError);
}

TEST_CASE("generators follow their size rules and are deterministic") {
    for (int n = 3; n <= 10; ++n) {
        auto f = gen_sat(n, 7);
        CHECK(f.clauses.size() == static_cast<std::size_t>((43 * n + 5) / 10));
        for (const auto& c : f.clauses) {
            REQUIRE(c.size() == 3);
            CHECK(std::abs(c[0]) != std::abs(c[1]));
            CHECK(std::abs(c[0]) != std::abs(c[2]));
            CHECK(std::abs(c[1]) != std::abs(c[2]));
        }
        CHECK(gen_sat(n, 7) == f);
        auto q = gen_qbf(n, 7);
        CHECK(q.prefix.size() == static_cast<std::size_t>(n));
        CHECK(q.clauses.size() == static_cast<std::size_t>(2 * n));
        for (const auto& c : q.clauses) CHECK((c.size() == 2 || c.size() == 3));
    }
    CHECK(gen_sat(8, 1) != gen_sat(8, 2));
}

TEST_CASE("traces agree with exhaustive solvers") {
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        int n = 3 + static_cast<int>(seed % 6);
        auto f = gen_sat(n, seed);
        auto st = dpll_trace(f);
        CHECK(st.answer == brute_force_sat(f));
        CHECK(count(st.response, kCall) == count(st.response, kReturn));
        check_oracle_run(st, count(st.response, kReturn));

        auto q = gen_qbf(n, seed);
        auto qt = qbf_trace(q);
        CHECK(qt.answer == brute_force_qbf(q));
        check_oracle_run(qt, count(qt.response, kReturn));
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto p = gen_puzzle(3 + int(seed % 2), 3 + int(seed % 2), seed);
        auto sols = brute_force_puzzle(p);
        REQUIRE(sols.size() == 1);
        auto t = puzzle_trace(p);
        REQUIRE(t.solution);
        CHECK(*t.solution == sols[0]);
        CHECK(satisfies(p, *t.solution));
        check_oracle_run(t, count(t.response, kReturn));
    }
}

TEST_CASE("exhaustive solvers on hand-made cases") {
    CHECK(brute_force_sat(CnfFormula{1, {{1}}}));
    CHECK_FALSE(brute_force_sat(CnfFormula{1, {{1}, {-1}}}));
    CHECK(brute_force_sat(CnfFormula{3, {}}));
    // ∀1 ∃2 : (1 ∨ 2) (¬1 ∨ ¬2) is true; swapping the prefix makes it false
    QbfFormula q{{{Quant::Forall, 1}, {Quant::Exists, 2}}, {{1, 2}, {-1, -2}}};
    CHECK(brute_force_qbf(q));
    CHECK(qbf_trace(q).answer);
    QbfFormula q2{{{Quant::Exists, 2}, {Quant::Forall, 1}}, {{1, 2}, {-1, -2}}};
    CHECK_FALSE(brute_force_qbf(q2));
    CHECK_FALSE(qbf_trace(q2).answer);
}
