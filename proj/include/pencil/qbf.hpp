#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "pencil/sat.hpp"

namespace pencil {

enum class Quant { Forall, Exists };

struct QbfFormula {
    std::vector<std::pair<Quant, int>> prefix;  // outermost first
    std::vector<Clause> clauses;
    friend bool operator==(const QbfFormula&, const QbfFormula&) = default;
};

// Every clause variable is quantified exactly once; variables are positive.
void validate(const QbfFormula& f);

struct QbfGenConfig {
    int clauses_per_var = 2;
    int min_width = 2;
    int max_width = 3;
};

// Prefix is a random permutation of 1..n, each variable existential with
// probability 1/2. Clause variables are drawn with replacement.
QbfFormula gen_qbf(int n, std::uint64_t seed, const QbfGenConfig& cfg = {});

// Bottom-up evaluation of the whole truth table; n <= 22.
bool brute_force_qbf(const QbfFormula& f);

struct QbfTrace : TaskTrace {
    bool answer = false;
};

// Expands the prefix left to right, False before True, short-circuiting
// (∃ on True, ∀ on False); leaves check clauses in order.
QbfTrace qbf_trace(const QbfFormula& f);

TokenSeq qbf_prompt(const QbfFormula& f);
QbfFormula parse_qbf_prompt(std::string_view text);

}  // namespace pencil
