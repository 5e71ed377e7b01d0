#include <doctest.h>

#include <random>

#include "pencil/fasp.hpp"
#include "pencil/rng.hpp"

using namespace pencil;
using namespace pencil::fasp;

namespace {

// Tokens "n-3" .. "n3" embedding to their integer value.
struct IntStream {
    Program p;
    Expr x;
    std::vector<Token> tokens;
    IntStream() {
        std::unordered_map<Token, Vec> tab;
        for (int v = -3; v <= 3; ++v) {
            Token t = Token::base("n" + std::to_string(v));
            tokens.push_back(t);
            tab[t] = Vec{Rational(v)};
        }
        x = p.token_embedding(tab, 1);
    }
    Token tok(int v) const { return tokens[static_cast<std::size_t>(v + 3)]; }
};

Rational scalar_at(Evaluator& ev, Expr e) { return ev.value(e).at(0); }

}  // namespace

TEST_CASE("hardmax spreads mass over maximizers") {
    CHECK(hardmax({1, 3, 3}) == Vec{0, Rational(1, 2), Rational(1, 2)});
    CHECK(hardmax({5}) == Vec{1});
    CHECK(hardmax({2, 2, 2, 2}) == Vec(4, Rational(1, 4)));
    CHECK_THROWS_AS(hardmax({}), FaspError);
}

TEST_CASE("averages, lengths and sums") {
    IntStream s;
    Expr avg_one = average(s.p.one());
    Expr inv = inv_seq_len(s.p);
    Expr total = sum(s.p.one());
    Expr running = sum(s.x);
    Evaluator ev(s.p, true);
    Rational acc = 0;
    std::mt19937_64 rng(5);
    for (int n = 1; n <= 12; ++n) {
        int v = static_cast<int>(rng() % 7) - 3;
        ev.push(s.tok(v));
        acc += v;
        CHECK(scalar_at(ev, avg_one) == 1);
        CHECK(scalar_at(ev, inv) == Rational(1, n));
        CHECK(scalar_at(ev, total) == n);
        CHECK(scalar_at(ev, running) == acc);
    }
}

TEST_CASE("local operators agree with their definitions") {
    IntStream s;
    Expr y = s.p.token_embedding([&] {
        std::unordered_map<Token, Vec> t;
        for (int v = -3; v <= 3; ++v) t[s.tok(v)] = Vec{Rational((v * 5 + 4) % 7 - 3)};
        return t;
    }(), 1);
    Expr b1 = geq(s.x, s.p.constant(Vec{0}));
    Expr b2 = geq(y, s.p.constant(Vec{0}));
    Expr e_max = max(s.x, y), e_min = min(s.x, y), e_leq = leq(s.x, y), e_geq = geq(s.x, y), e_eq = equal(s.x, y),
         e_less = less(s.x, y), e_gt = greater(s.x, y), e_neq = neq(s.x, y), e_and = and_(b1, b2), e_or = or_(b1, b2),
         e_xor = xor_(b1, b2), e_not = not_(b1);
    for (int v = -3; v <= 3; ++v) {
        Evaluator ev(s.p, true);
        ev.push(s.tok(v));
        int a = v, b = (v * 5 + 4) % 7 - 3;
        bool ba = a >= 0, bb = b >= 0;
        CAPTURE(a);
        CAPTURE(b);
        CHECK(scalar_at(ev, e_max) == std::max(a, b));
        CHECK(scalar_at(ev, e_min) == std::min(a, b));
        CHECK(scalar_at(ev, e_leq) == (a <= b));
        CHECK(scalar_at(ev, e_geq) == (a >= b));
        CHECK(scalar_at(ev, e_eq) == (a == b));
        CHECK(scalar_at(ev, e_less) == (a < b));
        CHECK(scalar_at(ev, e_gt) == (a > b));
        CHECK(scalar_at(ev, e_neq) == (a != b));
        CHECK(scalar_at(ev, e_and) == (ba && bb));
        CHECK(scalar_at(ev, e_or) == (ba || bb));
        CHECK(scalar_at(ev, e_xor) == (ba != bb));
        CHECK(scalar_at(ev, e_not) == !ba);
    }
}

TEST_CASE("kron and if_then_else") {
    Program p;
    Token a = Token::base("ka"), b = Token::base("kb");
    Expr u = p.token_embedding({{a, Vec{1, 0}}, {b, Vec{0, 1}}}, 2);
    Expr w = p.token_embedding({{a, Vec{0, 0, 1}}, {b, Vec{1, 0, 0}}}, 3);
    Expr c = p.token_embedding({{a, Vec{1}}, {b, Vec{0}}}, 1);
    Expr k = kron(u, w);
    Expr ite = if_then_else(c, p.constant(Vec{7, 8}), p.constant(Vec{-1, -2}));
    CHECK(eval(p, k, {a}) == Vec{0, 0, 1, 0, 0, 0});
    CHECK(eval(p, k, {b}) == Vec{0, 0, 0, 1, 0, 0});
    CHECK(eval(p, ite, {b, a}) == Vec{7, 8});
    CHECK(eval(p, ite, {a, b}) == Vec{-1, -2});
}

TEST_CASE("running max/min/and/or over prefixes") {
    IntStream s;
    Expr mx = seq_max(s.x), mn = seq_min(s.x);
    Expr pos = geq(s.x, s.p.constant(Vec{1}));
    Expr sa = seq_and(pos), so = seq_or(pos);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        Evaluator ev(s.p, true);
        int hi = -100, lo = 100;
        bool all = true, any = false;
        for (int n = 0; n < 10; ++n) {
            int v = static_cast<int>(rng() % 7) - 3;
            ev.push(s.tok(v));
            hi = std::max(hi, v);
            lo = std::min(lo, v);
            all = all && v >= 1;
            any = any || v >= 1;
            CHECK(scalar_at(ev, mx) == hi);
            CHECK(scalar_at(ev, mn) == lo);
            CHECK(scalar_at(ev, sa) == all);
            CHECK(scalar_at(ev, so) == any);
        }
    }
}

TEST_CASE("position indicators") {
    Program p;
    Expr ind[5];
    for (int k = 1; k <= 4; ++k) ind[k] = is_pos_k(p, k);
    Evaluator ev(p, true);
    for (int n = 1; n <= 9; ++n) {
        ev.push(Token::base("z"));
        for (int k = 1; k <= 4; ++k) CHECK(scalar_at(ev, ind[k]) == (n == k));
    }
}

TEST_CASE("rightmost attention picks the latest maximizer") {
    IntStream s;
    Expr value = s.p.seq_len();
    Expr r = rha(s.p.one(), s.x, value);
    Expr best = rightmost_best_match(s.p.constant(Vec{1}), s.x, value);
    Expr exact = rightmost_exact_match(s.p.constant(Vec{2}), s.x, value, s.p.constant(Vec{-7}));

    // keys with tied matches at positions 2 and 5
    Evaluator ev(s.p, true);
    for (int v : {0, 3, 1, 2, 3, -1}) ev.push(s.tok(v));
    CHECK(scalar_at(ev, r) == 5);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        Evaluator e2(s.p, true);
        std::vector<int> xs;
        const int n = 1 + static_cast<int>(rng() % 9);
        for (int i = 0; i < n; ++i) {
            int v = static_cast<int>(rng() % 3);  // small range forces ties
            xs.push_back(v);
            e2.push(s.tok(v));
        }
        int arg_max = 0, arg_best = 0, arg_exact = -7;
        for (int j = 0; j < n; ++j) {
            if (xs[j] >= xs[arg_max]) arg_max = j;
            if (std::abs(xs[j] - 1) <= std::abs(xs[arg_best] - 1)) arg_best = j;
            if (xs[j] == 2) arg_exact = j + 1;
        }
        CHECK(scalar_at(e2, r) == arg_max + 1);
        CHECK(scalar_at(e2, best) == arg_best + 1);
        CHECK(scalar_at(e2, exact) == arg_exact);
    }
}

TEST_CASE("construction-time dimension checks") {
    Program p;
    Expr a = p.constant(Vec{1, 2});
    Expr b = p.constant(Vec{1});
    CHECK_THROWS_AS(add(a, b), FaspError);
    CHECK_THROWS_AS(p.aha(a, b, b), FaspError);
    CHECK_THROWS_AS(p.linear(Matrix{Vec{1}}, a), FaspError);
    CHECK_THROWS_AS(seq_max(a), FaspError);
    CHECK_THROWS_AS(if_then_else(a, a, a), FaspError);
    CHECK_THROWS_AS(p.set_result(a, {kSep}), FaspError);
    Program other;
    CHECK_THROWS_AS(add(b, other.constant(Vec{1})), FaspError);
}

TEST_CASE("decoding needs a unique argmax") {
    Program p;
    Token a = Token::base("da"), b = Token::base("db");
    Expr e = p.token_embedding({{a, Vec{1, 0}}, {b, Vec{1, 1}}}, 2);
    p.set_result(e, {a, b});
    CHECK(next_token(p, {a}) == a);
    CHECK_THROWS_AS(next_token(p, {b}), AmbiguousDecode);
    CHECK_THROWS_AS(next_token(p, {}), FaspError);
    CHECK_THROWS_AS(next_token(p, {Token::base("dc")}), FaspError);
}

TEST_CASE("type checking flags non-boolean values in boolean nodes") {
    IntStream s;
    Expr bad = not_(s.x);  // declared boolean, fed an integer
    (void)bad;
    Evaluator strict(s.p, true);
    CHECK_THROWS_AS(strict.push(s.tok(3)), FaspError);
    Evaluator lax(s.p, false);
    CHECK_NOTHROW(lax.push(s.tok(3)));
}

TEST_CASE("machine program reproduces the PENCIL simulation token by token") {
    std::vector<TMSpec> specs = {binary_counter_tm(), unary_increment_tm()};
    for (std::uint64_t m = 0; m < 4; ++m) specs.push_back(random_tm(m + 40));
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const TMSpec& spec = specs[s];
        Program prog = build_tm_program(spec);
        Evaluator ev(prog, true);
        TmTeacher teacher(spec);
        for (std::uint64_t i = 0; i < 4; ++i) {
            auto input = s == 0 ? std::vector<int>(3, spec.symbol("0")) : random_input(spec, derive_seed(s, i), 5);
            TokenSeq ctx = teacher.codec().encode(encode_input(spec, input));
            bool first = true;
            bool in_summary = false;
            for (int step = 0; step < 400; ++step) {
                Token expected = teacher(ctx);
                if (!ctx.empty()) {
                    Token got = next_token(ev, prog, ctx);
                    REQUIRE(got == expected);
                    if (first) CHECK(got == teacher.codec().encode(am_next(spec, encode_input(spec, input))));
                    const bool has_sep = std::find(ctx.begin(), ctx.end(), kSep) != ctx.end();
                    CHECK(ev.value(prog.lookup("exist_sep")).at(0) == (has_sep ? 1 : 0));
                }
                first = false;
                ctx.push_back(expected);
                if (expected == kSep) in_summary = true;
                if (expected == kReturn) {
                    ctx = reduce_simplified(ctx);
                    in_summary = false;
                }
                auto u = teacher.codec().decode(expected);
                if (!in_summary && u && spec.halting(u->q)) break;
            }
        }
    }
}

TEST_CASE("program listing names the definitions") {
    Program prog = build_tm_program(unary_increment_tm());
    auto text = prog.dump();
    for (const char* name : {"is_sep", "exist_sep", "next_sim_pos", "expected_sum_len", "current_symbol",
                             "end_simulation", "summary_symbol", "end_summary", "result"}) {
        CAPTURE(name);
        CHECK(text.find(std::string("# ") + name) != std::string::npos);
        CHECK(prog.lookup(name) >= 0);
    }
}

TEST_CASE("shared checker agrees on matching programs and catches a foreign one") {
    TMSpec spec = binary_counter_tm();
    Program prog = build_tm_program(spec);
    std::vector<std::vector<int>> inputs = {{}, {spec.symbol("0")}, {spec.symbol("0"), spec.symbol("1")}};
    auto ok = check_tm_program(spec, prog, inputs, 60);
    CHECK(ok.ok());
    CHECK(ok.runs == 3);
    CHECK(ok.tokens_checked >= 20);
    CHECK(ok.first_failure.empty());

    // same alphabet size and vocabulary shape, different transitions
    TMSpec other = spec;
    for (auto& row : other.delta)
        for (auto& tr : row) tr.move = -tr.move;
    Program wrong = build_tm_program(other);
    auto bad = check_tm_program(spec, wrong, inputs, 60);
    CHECK_FALSE(bad.ok());
    CHECK(bad.mismatches + bad.ambiguous > 0);
    CHECK_FALSE(bad.first_failure.empty());
}
