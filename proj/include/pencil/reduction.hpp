#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "pencil/core.hpp"

namespace pencil {

class MalformedTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ContextMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Half-open index range into a TokenSeq (0-based).
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
    friend bool operator==(const Span&, const Span&) = default;
};

// C [CALL] T [SEP] A [RETURN]; positions are 0-based.
struct RuleMatch {
    std::size_t call_idx = 0;
    std::size_t sep_idx = 0;
    std::size_t return_idx = 0;
    Span c, t, a;
    friend bool operator==(const RuleMatch&, const RuleMatch&) = default;
};

enum class Rule { Full, Simplified };

// Returns a match iff seq ends with [RETURN]; throws MalformedTrace when the
// trailing [RETURN] has no [SEP] or no [CALL] before that [SEP].
std::optional<RuleMatch> match_rule(const TokenSeq& seq);
TokenSeq reduce(const TokenSeq& seq);

// T [SEP] T' [RETURN] => T', with the last [SEP].
std::optional<Span> match_simplified(const TokenSeq& seq);
TokenSeq reduce_simplified(const TokenSeq& seq);

TokenSeq apply_rule(Rule rule, const TokenSeq& seq);

// One generate-then-reduce iteration. full = x^(i), reduced = x^(i+0.5)
// (absent on the final iteration, which ends at a terminal token).
struct Iteration {
    TokenSeq delta;
    std::size_t start_len = 0;  // |x^(i-0.5)|
    std::size_t full_len = 0;   // |x^(i)|
    std::optional<TokenSeq> reduced;
    std::size_t kept = 0;        // |C| for the full rule, 0 for the simplified one
    std::size_t answer_len = 0;  // |A| (or |T'|)
};

struct PencilRun {
    std::vector<Iteration> iterations;
    TokenSeq final_context;
    TokenSeq final_answer;
    std::size_t max_context = 0;
    std::size_t total_generated = 0;
    std::size_t reductions = 0;
    bool terminated = false;
};

struct Limits {
    std::size_t max_steps = std::size_t(1) << 26;
    std::size_t max_context = 2048;
};

class ResourceExceeded : public std::runtime_error {
public:
    ResourceExceeded(const std::string& what, PencilRun partial)
        : std::runtime_error(what), partial_(std::make_shared<PencilRun>(std::move(partial))) {}
    const PencilRun& partial() const { return *partial_; }
private:
    std::shared_ptr<PencilRun> partial_;
};

using Predictor = std::function<Token(const TokenSeq&)>;
using TerminalTest = std::function<bool(Token)>;

struct PencilOptions {
    Rule rule = Rule::Full;
    Limits limits;
    // Generation stops after emitting a token for which this returns true.
    TerminalTest terminal = [](Token t) { return t == kEndOfText; };
};

PencilRun run_pencil(const Predictor& predictor, const TokenSeq& prompt, const PencilOptions& options = {});

// prompt ++ every generated token, i.e. the trace without erasures.
TokenSeq scaffold(const PencilRun& run, const TokenSeq& prompt);

// Replays a scaffold token by token and checks, on every call, that the
// caller's context is what the rule should have left. The expected context is
// tracked with an independent call-stack bookkeeping rather than by calling
// reduce().
class OraclePredictor {
public:
    OraclePredictor(TokenSeq scaffold, std::size_t prompt_len, Rule rule = Rule::Full);
    Token operator()(const TokenSeq& context);
    std::size_t emitted() const { return pos_ - prompt_len_; }
    bool done() const { return pos_ == scaffold_.size(); }
    const TokenSeq& expected_context() const { return expected_; }

private:
    void absorb(Token t);

    TokenSeq scaffold_;
    std::size_t prompt_len_;
    std::size_t pos_;
    Rule rule_;
    TokenSeq expected_;
    std::vector<std::size_t> open_calls_;
    std::vector<std::size_t> seps_;
};

Predictor make_oracle_predictor(const TokenSeq& scaffold, std::size_t prompt_len, Rule rule = Rule::Full);

}  // namespace pencil
