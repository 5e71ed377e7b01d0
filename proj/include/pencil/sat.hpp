#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/core.hpp"

namespace pencil {

class TaskError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A prompt plus the full response a PENCIL run would emit without erasure
// (including the closing <|endoftext|>).
struct TaskTrace {
    TokenSeq prompt;
    TokenSeq response;
    TokenSeq scaffold() const {
        TokenSeq s = prompt;
        s.insert(s.end(), response.begin(), response.end());
        return s;
    }
};

using Clause = std::vector<int>;  // signed 1-based variable indices

struct CnfFormula {
    int n_vars = 0;
    std::vector<Clause> clauses;
    friend bool operator==(const CnfFormula&, const CnfFormula&) = default;
};

void validate(const CnfFormula& f);

// round(4.3 n) clauses over 3 distinct variables with fair-coin signs.
CnfFormula gen_sat(int n, std::uint64_t seed);

// Exhaustive check; n_vars <= 24.
bool brute_force_sat(const CnfFormula& f);

struct SatTrace : TaskTrace {
    bool answer = false;
};

// DPLL with unit propagation (first unit clause in order) and branching on
// the smallest remaining variable, True first.
SatTrace dpll_trace(const CnfFormula& f);

// "( 4 ∨ ¬ 3 ∨ ¬ 2 ) ∧ ( ... )"
void write_cnf(TokenWriter& w, const std::vector<Clause>& clauses);
std::string format_cnf(const std::vector<Clause>& clauses);
TokenSeq sat_prompt(const CnfFormula& f);

// Parses a prompt (with or without the delimiters) back into a formula;
// n_vars is the largest variable mentioned unless given.
CnfFormula parse_sat_prompt(std::string_view text, int n_vars = 0);

}  // namespace pencil
