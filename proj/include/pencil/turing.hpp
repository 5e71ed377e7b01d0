#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pencil/core.hpp"
#include "pencil/reduction.hpp"

namespace pencil {

class TmError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Transition {
    int next = 0;
    int write = 0;  // never the blank
    int move = 0;   // -1, 0, +1
    friend bool operator==(const Transition&, const Transition&) = default;
};

// Single-tape machine. States and symbols are indices into the name lists.
struct TMSpec {
    std::vector<std::string> alphabet;
    int blank = 0;
    std::vector<std::string> states;
    int start = 0;
    std::set<int> accept;
    std::set<int> reject;
    std::vector<std::vector<Transition>> delta;  // [state][symbol]

    bool halting(int q) const { return accept.count(q) || reject.count(q); }
    int symbol(std::string_view name) const;  // throws TmError
    int state(std::string_view name) const;   // throws TmError
    friend bool operator==(const TMSpec&, const TMSpec&) = default;
};

// Checks totality, blank-free writes, move range, disjoint halting sets and
// name hygiene (non-empty, no whitespace or '/', not a special token).
void validate(const TMSpec& spec);

// Text format, one directive per line, '#' starts a comment line:
//   alphabet: b 0 1
//   blank: b
//   states: q0 q1 acc
//   start: q0
//   accept: acc
//   reject:
//   q0 0 -> q1 1 +1
TMSpec parse_tm(std::string_view text);
TMSpec load_tm(const std::string& path);
std::string format_tm(const TMSpec& spec);

struct Configuration {
    int state = 0;
    std::map<long, int> tape;  // non-blank cells only
    long head = 0;
    friend bool operator==(const Configuration&, const Configuration&) = default;
};

int read(const TMSpec& spec, const Configuration& c);
Configuration initial_configuration(const TMSpec& spec, const std::vector<int>& input);
// Shifts so the leftmost non-blank cell (or the head on a blank tape) is 0.
Configuration canonical(const Configuration& c);
bool translation_equal(const Configuration& a, const Configuration& b);

struct UpdateToken {
    int q = 0;
    int a = 0;
    int d = 0;
    friend bool operator==(const UpdateToken&, const UpdateToken&) = default;
};
using UpdateSeq = std::vector<UpdateToken>;

enum class Verdict { Accept, Reject, Timeout };
const char* to_string(Verdict v);

struct TmResult {
    Verdict verdict = Verdict::Timeout;
    std::size_t steps = 0;  // T
    std::size_t space = 0;  // S: peak extent of non-blank cells and head
    Configuration final;
};

// Input symbols separated by whitespace, e.g. "1 1".
std::vector<int> parse_input(const TMSpec& spec, std::string_view text);
std::string format_input(const TMSpec& spec, const std::vector<int>& input);

TmResult tm_run(const TMSpec& spec, const std::vector<int>& input, std::size_t step_cap);

Configuration apply_update(Configuration c, const UpdateToken& u);
Configuration apply_updates(Configuration c, const UpdateSeq& seq);
Configuration blank_configuration(const TMSpec& spec);  // c0: start state, blank tape, head 0
UpdateSeq encode_input(const TMSpec& spec, const std::vector<int>& input);

UpdateToken step_token(const TMSpec& spec, const Configuration& c);
UpdateToken am_next(const TMSpec& spec, const UpdateSeq& seq);

// Canonical update sequence rebuilding c up to translation. Requires
// min_pos - 1 <= head <= max_pos + 1; a blank tape with the head at 0 gives
// the empty sequence.
UpdateSeq embed(const TMSpec& spec, const Configuration& c);
UpdateSeq state_fn(const TMSpec& spec, const UpdateSeq& seq);

// Maps update tokens to vocabulary tokens with surface "q/a/d".
class TmCodec {
public:
    explicit TmCodec(const TMSpec& spec);
    Token encode(const UpdateToken& u) const;
    std::optional<UpdateToken> decode(Token t) const;
    TokenSeq encode(const UpdateSeq& seq) const;
    // Throws TmError on [CALL]/[SEP]/[RETURN] or foreign tokens.
    UpdateSeq decode_all(const TokenSeq& seq) const;
    // All update tokens in (q, a, d) order, a ranging over non-blank symbols.
    const std::vector<UpdateToken>& all() const { return all_; }
    std::size_t index(const UpdateToken& u) const;

private:
    const TMSpec* spec_;
    std::vector<UpdateToken> all_;
    std::vector<Token> tokens_;
    std::unordered_map<Token, std::size_t> lookup_;
};

// Next token of the PENCIL simulation: update tokens until the context is at
// least twice its state length, then [SEP], the state, [RETURN].
class TmTeacher {
public:
    explicit TmTeacher(const TMSpec& spec) : spec_(spec), codec_(spec) {}
    Token operator()(const TokenSeq& context) const;
    const TmCodec& codec() const { return codec_; }

private:
    const TMSpec& spec_;
    TmCodec codec_;
};

struct PencilTmResult {
    Verdict verdict = Verdict::Timeout;
    std::size_t steps = 0;         // update tokens emitted (T)
    std::size_t total_tokens = 0;  // all generated tokens
    std::size_t max_context = 0;   // includes the prompt
    std::size_t reductions = 0;
    std::size_t state_space = 0;   // max |state_fn| over the run
    TokenSeq prompt;
    TokenSeq final_context;
};

PencilTmResult run_pencil_tm(const TMSpec& spec, const std::vector<int>& input, std::size_t step_cap);

struct RandomTmConfig {
    std::vector<int> state_counts = {2, 3, 4};
    std::vector<int> alphabet_sizes = {2, 3};  // including the blank
};

TMSpec random_tm(std::uint64_t seed, const RandomTmConfig& cfg = {});
std::vector<int> random_input(const TMSpec& spec, std::uint64_t seed, std::size_t max_len);

// Writes bits zeros and counts up in binary until the number overflows;
// the head sweeps the same few cells for about 2^bits * 4 steps.
TMSpec binary_counter_tm();
// q0 moves right over 1s and writes one more 1 on the first blank.
TMSpec unary_increment_tm();

}  // namespace pencil
