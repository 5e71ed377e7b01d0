#include "pencil/reduction.hpp"

#include <algorithm>

namespace pencil {

namespace {

// The answer span may not hold another [RETURN] (nor, trivially, a [SEP]).
std::size_t last_sep_before(const TokenSeq& seq, std::size_t ret) {
    std::size_t i = ret;
    while (i > 0) {
        Token t = seq[i - 1];
        if (t == kSep) return i;
        if (t == kReturn)
            throw MalformedTrace("[RETURN] at position " + std::to_string(ret) + " follows [RETURN] at position " +
                                 std::to_string(i - 1) + " with no [SEP] in between");
        --i;
    }
    throw MalformedTrace("[RETURN] at position " + std::to_string(ret) + " has no preceding [SEP]");
}

}  // namespace

std::optional<RuleMatch> match_rule(const TokenSeq& seq) {
    if (seq.empty() || seq.back() != kReturn) return std::nullopt;
    const std::size_t ret = seq.size() - 1;
    std::size_t sep = last_sep_before(seq, ret) - 1;
    std::size_t call = sep;
    while (call > 0 && seq[call - 1] != kCall) --call;
    if (call == 0)
        throw MalformedTrace("[SEP] at position " + std::to_string(sep) + " has no preceding [CALL]");
    --call;
    RuleMatch m;
    m.call_idx = call;
    m.sep_idx = sep;
    m.return_idx = ret;
    m.c = {0, call};
    m.t = {call + 1, sep};
    m.a = {sep + 1, ret};
    return m;
}

TokenSeq reduce(const TokenSeq& seq) {
    auto m = match_rule(seq);
    if (!m) return seq;
    TokenSeq out;
    out.reserve(m->c.size() + m->a.size());
    out.insert(out.end(), seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(m->c.end));
    out.insert(out.end(), seq.begin() + static_cast<std::ptrdiff_t>(m->a.begin),
               seq.begin() + static_cast<std::ptrdiff_t>(m->a.end));
    return out;
}

std::optional<Span> match_simplified(const TokenSeq& seq) {
    if (seq.empty() || seq.back() != kReturn) return std::nullopt;
    const std::size_t ret = seq.size() - 1;
    return Span{last_sep_before(seq, ret), ret};
}

TokenSeq reduce_simplified(const TokenSeq& seq) {
    auto s = match_simplified(seq);
    if (!s) return seq;
    return TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(s->begin),
                    seq.begin() + static_cast<std::ptrdiff_t>(s->end));
}

TokenSeq apply_rule(Rule rule, const TokenSeq& seq) {
    return rule == Rule::Full ? reduce(seq) : reduce_simplified(seq);
}

namespace {

TokenSeq answer_of(const TokenSeq& ctx, const TokenSeq& prompt) {
    std::size_t begin = 0, end = ctx.size();
    if (ctx.size() >= prompt.size() && std::equal(prompt.begin(), prompt.end(), ctx.begin())) begin = prompt.size();
    if (end > begin && ctx[end - 1] == kEndOfText) --end;
    return TokenSeq(ctx.begin() + static_cast<std::ptrdiff_t>(begin), ctx.begin() + static_cast<std::ptrdiff_t>(end));
}

}  // namespace

PencilRun run_pencil(const Predictor& predictor, const TokenSeq& prompt, const PencilOptions& options) {
    if (options.limits.max_steps == 0 || options.limits.max_context == 0)
        throw std::invalid_argument("run_pencil: limits must be positive");
    PencilRun run;
    TokenSeq ctx = prompt;
    run.max_context = ctx.size();
    Iteration cur;
    cur.start_len = ctx.size();

    auto fail = [&](const std::string& why) {
        cur.full_len = ctx.size();
        run.iterations.push_back(cur);
        run.final_context = ctx;
        run.final_answer = answer_of(ctx, prompt);
        throw ResourceExceeded(why, run);
    };

    std::size_t steps = 0;
    for (;;) {
        if (steps == options.limits.max_steps)
            fail("run_pencil: step limit " + std::to_string(options.limits.max_steps) + " reached");
        Token t = predictor(ctx);
        ++steps;
        ctx.push_back(t);
        cur.delta.push_back(t);
        ++run.total_generated;
        run.max_context = std::max(run.max_context, ctx.size());
        if (ctx.size() > options.limits.max_context)
            fail("run_pencil: context length " + std::to_string(ctx.size()) + " exceeds limit " +
                 std::to_string(options.limits.max_context));
        if (options.terminal(t)) {
            cur.full_len = ctx.size();
            run.iterations.push_back(std::move(cur));
            run.terminated = true;
            break;
        }
        if (t != kReturn) continue;
        cur.full_len = ctx.size();
        TokenSeq reduced;
        if (options.rule == Rule::Full) {
            auto m = match_rule(ctx);
            cur.kept = m->c.size();
            cur.answer_len = m->a.size();
            reduced = reduce(ctx);
        } else {
            auto s = match_simplified(ctx);
            cur.kept = 0;
            cur.answer_len = s->size();
            reduced = reduce_simplified(ctx);
        }
        cur.reduced = reduced;
        run.iterations.push_back(std::move(cur));
        ++run.reductions;
        ctx = std::move(reduced);
        cur = Iteration{};
        cur.start_len = ctx.size();
    }
    run.final_context = ctx;
    run.final_answer = answer_of(ctx, prompt);
    return run;
}

TokenSeq scaffold(const PencilRun& run, const TokenSeq& prompt) {
    TokenSeq out = prompt;
    for (const auto& it : run.iterations) out.insert(out.end(), it.delta.begin(), it.delta.end());
    return out;
}

OraclePredictor::OraclePredictor(TokenSeq scaffold, std::size_t prompt_len, Rule rule)
    : scaffold_(std::move(scaffold)), prompt_len_(prompt_len), pos_(prompt_len), rule_(rule) {
    if (prompt_len_ > scaffold_.size()) throw std::invalid_argument("oracle: prompt longer than scaffold");
    for (std::size_t i = 0; i < prompt_len_; ++i) {
        Token t = scaffold_[i];
        if (t == kCall) open_calls_.push_back(expected_.size());
        if (t == kSep) seps_.push_back(expected_.size());
        expected_.push_back(t);
    }
}

void OraclePredictor::absorb(Token t) {
    const std::size_t idx = expected_.size();
    expected_.push_back(t);
    if (t == kCall) open_calls_.push_back(idx);
    if (t == kSep) seps_.push_back(idx);
    if (t != kReturn) return;

    if (seps_.empty()) throw MalformedTrace("oracle: [RETURN] at scaffold position " + std::to_string(pos_ - 1) +
                                            " closes no [SEP]");
    const std::size_t s = seps_.back();
    seps_.pop_back();
    if (rule_ == Rule::Simplified) {
        expected_ = TokenSeq(expected_.begin() + static_cast<std::ptrdiff_t>(s + 1), expected_.end() - 1);
        seps_.clear();
        open_calls_.clear();
        for (std::size_t i = 0; i < expected_.size(); ++i)
            if (expected_[i] == kCall) open_calls_.push_back(i);
        return;
    }
    // Calls opened inside the answer survive (tail recursion) and shift left.
    std::vector<std::size_t> tail;
    while (!open_calls_.empty() && open_calls_.back() > s) {
        tail.push_back(open_calls_.back());
        open_calls_.pop_back();
    }
    if (open_calls_.empty())
        throw MalformedTrace("oracle: [SEP] at context position " + std::to_string(s) + " closes no [CALL]");
    const std::size_t c = open_calls_.back();
    open_calls_.pop_back();
    while (!seps_.empty() && seps_.back() > c) seps_.pop_back();
    TokenSeq next(expected_.begin(), expected_.begin() + static_cast<std::ptrdiff_t>(c));
    next.insert(next.end(), expected_.begin() + static_cast<std::ptrdiff_t>(s + 1), expected_.end() - 1);
    expected_ = std::move(next);
    const std::size_t shift = s + 1 - c;
    for (auto it = tail.rbegin(); it != tail.rend(); ++it) open_calls_.push_back(*it - shift);
}

Token OraclePredictor::operator()(const TokenSeq& context) {
    if (pos_ == scaffold_.size())
        throw ContextMismatch("oracle: asked for a token after the scaffold ended");
    if (context != expected_) {
        std::size_t i = 0;
        while (i < context.size() && i < expected_.size() && context[i] == expected_[i]) ++i;
        throw ContextMismatch("oracle: context diverges at position " + std::to_string(i) + " before scaffold token " +
                              std::to_string(pos_) + " (context length " + std::to_string(context.size()) +
                              ", expected " + std::to_string(expected_.size()) + ")");
    }
    Token t = scaffold_[pos_++];
    absorb(t);
    return t;
}

Predictor make_oracle_predictor(const TokenSeq& scaffold, std::size_t prompt_len, Rule rule) {
    auto oracle = std::make_shared<OraclePredictor>(scaffold, prompt_len, rule);
    return [oracle](const TokenSeq& ctx) { return (*oracle)(ctx); };
}

}  // namespace pencil
