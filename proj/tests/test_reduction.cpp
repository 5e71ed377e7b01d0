#include <doctest.h>

#include <random>

#include "golden_util.hpp"
#include "pencil/reduction.hpp"

using namespace pencil;

namespace {

TokenSeq T(const char* text) { return tokenize(text); }

// Direct reading of the rule: try every ([CALL], [SEP]) pair and keep those
// satisfying the token-class constraints of C, T and A.
std::vector<std::pair<std::size_t, std::size_t>> all_matches(const TokenSeq& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (s.empty() || s.back() != kReturn) return out;
    std::size_t r = s.size() - 1;
    for (std::size_t i = 0; i < r; ++i) {
        if (s[i] != kCall) continue;
        for (std::size_t j = i + 1; j < r; ++j) {
            if (s[j] != kSep) continue;
            bool ok = true;
            for (std::size_t k = i + 1; k < j; ++k) ok &= s[k] != kCall;
            for (std::size_t k = j + 1; k < r; ++k) ok &= s[k] != kSep && s[k] != kReturn;
            if (ok) out.emplace_back(i, j);
        }
    }
    return out;
}

TokenSeq random_seq(std::mt19937_64& rng, std::size_t max_len) {
    static const Token alphabet[] = {kCall, kSep, kReturn, Token::base("a"), Token::base("b"), Token::base("c")};
    TokenSeq s;
    auto n = rng() % (max_len + 1);
    for (std::size_t i = 0; i < n; ++i) s.push_back(alphabet[rng() % 6]);
    if (rng() % 2) s.push_back(kReturn);
    return s;
}

}  // namespace

TEST_CASE("match_rule on the minimal instance") {
    auto s = T("c [CALL] t [SEP] a [RETURN]");
    auto m = match_rule(s);
    REQUIRE(m);
    CHECK(m->call_idx == 1);
    CHECK(m->sep_idx == 3);
    CHECK(m->return_idx == 5);
    CHECK(m->c == Span{0, 1});
    CHECK(m->t == Span{2, 3});
    CHECK(m->a == Span{4, 5});
    CHECK(reduce(s) == T("c a"));
}

TEST_CASE("match_rule without trailing return") {
    CHECK_FALSE(match_rule(T("a b c")));
    CHECK(reduce(T("a [CALL] b")) == T("a [CALL] b"));
    CHECK(reduce(TokenSeq{}).empty());
}

TEST_CASE("malformed returns are errors") {
    CHECK_THROWS_AS(match_rule(T("a b [RETURN]")), MalformedTrace);
    CHECK_THROWS_AS(match_rule(T("a [SEP] b [RETURN]")), MalformedTrace);
    CHECK_THROWS_AS(match_rule(T("[CALL] a [SEP] b [RETURN] c [RETURN]")), MalformedTrace);
    CHECK_THROWS_AS(reduce_simplified(T("a [RETURN]")), MalformedTrace);
}

TEST_CASE("tail recursion keeps the new call open") {
    CHECK(reduce(T("[CALL] t [SEP] [CALL] u [RETURN]")) == T("[CALL] u"));
    CHECK(reduce(T("x [CALL] q [SEP] [CALL] q2 [RETURN]")) == T("x [CALL] q2"));
}

TEST_CASE("T may hold [SEP] and [RETURN]") {
    auto s = T("c [CALL] t1 [SEP] t2 [RETURN] t3 [SEP] a [RETURN]");
    auto m = match_rule(s);
    REQUIRE(m);
    CHECK(m->call_idx == 1);
    CHECK(m->sep_idx == 7);
    CHECK(reduce(s) == T("c a"));
}

TEST_CASE("simplified rule") {
    CHECK(reduce_simplified(T("t1 t2 [SEP] s1 [RETURN]")) == T("s1"));
    CHECK(reduce_simplified(T("t1 t2")) == T("t1 t2"));
    CHECK(reduce_simplified(T("[SEP] [RETURN]")).empty());
    CHECK(reduce_simplified(T("a [SEP] b [SEP] c d [RETURN]")) == T("c d"));
}

TEST_CASE("reduce reproduces every recorded reduction step") {
    for (const char* name : {"sat_steps.txt", "qbf_steps.txt", "puzzle_steps.txt"}) {
        CAPTURE(name);
        auto steps = golden::read_steps(name);
        REQUIRE(steps.generated.size() == steps.reduced.size());
        REQUIRE_FALSE(steps.generated.empty());
        for (std::size_t k = 0; k < steps.generated.size(); ++k) {
            CAPTURE(k + 1);
            CHECK(to_string(reduce(tokenize(steps.generated[k]))) == steps.reduced[k]);
        }
    }
}

TEST_CASE("first and last recorded QBF reductions") {
    auto steps = golden::read_steps("qbf_steps.txt");
    auto r1 = to_string(reduce(tokenize(steps.generated.front())));
    const std::string tail = "Try 2 = False Answer: False";
    REQUIRE(r1.size() > tail.size());
    CHECK(r1.substr(r1.size() - tail.size()) == tail);
    CHECK(to_string(reduce(tokenize(steps.generated.back()))) == "Answer: True");
    CHECK(steps.generated.size() == 25);
}

TEST_CASE("reduction properties on random sequences") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        auto s = random_seq(rng, 14);
        auto matches = all_matches(s);
        CHECK(matches.size() <= 1);
        std::optional<RuleMatch> m;
        bool malformed = false;
        try {
            m = match_rule(s);
        } catch (const MalformedTrace&) {
            malformed = true;
        }
        if (s.empty() || s.back() != kReturn) {
            CHECK_FALSE(m);
            CHECK_FALSE(malformed);
            CHECK(reduce(s) == s);
            continue;
        }
        CHECK(malformed == matches.empty());
        if (malformed) continue;
        REQUIRE(m);
        CHECK(m->call_idx == matches[0].first);
        CHECK(m->sep_idx == matches[0].second);
        auto r = reduce(s);
        CHECK(r.size() == s.size() - m->t.size() - 3);
        CHECK(reduce(s) == r);
        if (r.empty() || r.back() != kReturn) CHECK(reduce(r) == r);
    }
}

TEST_CASE("run_pencil with an immediate end of text") {
    auto run = run_pencil([](const TokenSeq&) { return kEndOfText; }, T("<|startoftext|> q <|endofprompt|>"));
    CHECK(run.reductions == 0);
    CHECK(run.final_answer.empty());
    CHECK(run.total_generated == 1);
    CHECK(run.iterations.size() == 1);
    CHECK(run.max_context == 4);
}

TEST_CASE("run_pencil replays a two-iteration scaffold") {
    auto prompt = T("<|startoftext|> p <|endofprompt|>");
    auto body = T("[CALL] q [CALL] r [SEP] x [RETURN] [SEP] y [RETURN] y <|endoftext|>");
    TokenSeq full = prompt;
    full.insert(full.end(), body.begin(), body.end());
    auto run = run_pencil(make_oracle_predictor(full, prompt.size()), prompt);
    CHECK(run.reductions == 2);
    REQUIRE(run.iterations.size() == 3);
    CHECK(to_string(*run.iterations[0].reduced) == "<|startoftext|> p <|endofprompt|> [CALL] q x");
    CHECK(to_string(*run.iterations[1].reduced) == "<|startoftext|> p <|endofprompt|> y");
    CHECK(to_string(run.final_answer) == "y y");
    CHECK(run.max_context == 3 + 7);
    CHECK(run.total_generated == body.size());
    CHECK(scaffold(run, prompt) == full);
    CHECK(scaffold(run, prompt).size() == prompt.size() + run.total_generated);
}

TEST_CASE("oracle rejects a context that was not reduced") {
    auto prompt = T("p");
    auto full = T("p [CALL] a [SEP] b [RETURN] c <|endoftext|>");
    OraclePredictor oracle(full, 1);
    TokenSeq ctx = prompt;
    for (int i = 0; i < 5; ++i) ctx.push_back(oracle(ctx));
    CHECK_THROWS_AS(oracle(ctx), ContextMismatch);
}

TEST_CASE("oracle flags a return before any separator") {
    auto full = T("p [CALL] a [RETURN] <|endoftext|>");
    CHECK_THROWS_AS(run_pencil(make_oracle_predictor(full, 1), T("p")), MalformedTrace);
}

TEST_CASE("limits raise ResourceExceeded with the partial run") {
    auto forever = [](const TokenSeq&) { return Token::base("z"); };
    PencilOptions opt;
    opt.limits.max_context = 10;
    try {
        run_pencil(forever, T("a b"), opt);
        FAIL("expected ResourceExceeded");
    } catch (const ResourceExceeded& e) {
        CHECK(e.partial().total_generated == 9);
        CHECK(e.partial().max_context == 11);
    }
    opt.limits.max_context = 2048;
    opt.limits.max_steps = 5;
    CHECK_THROWS_AS(run_pencil(forever, T("a"), opt), ResourceExceeded);
}

TEST_CASE("simplified rule inside run_pencil") {
    auto full = T("a b [SEP] s [RETURN] s t <|endoftext|>");
    PencilOptions opt;
    opt.rule = Rule::Simplified;
    auto run = run_pencil(make_oracle_predictor(full, 2, Rule::Simplified), T("a b"), opt);
    CHECK(run.reductions == 1);
    CHECK(to_string(run.final_context) == "s s t <|endoftext|>");
}
