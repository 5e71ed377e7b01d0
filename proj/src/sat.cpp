#include "pencil/sat.hpp"

#include <algorithm>
#include <cstdlib>

#include "pencil/rng.hpp"

namespace pencil {

namespace {

const std::string kOr = "∨";
const std::string kAnd = "∧";
const std::string kNot = "¬";

bool has_empty_clause(const std::vector<Clause>& cs) {
    return std::any_of(cs.begin(), cs.end(), [](const Clause& c) { return c.empty(); });
}

// Drops clauses satisfied by lit and removes the falsified literal elsewhere.
std::vector<Clause> assign(const std::vector<Clause>& cs, int lit) {
    std::vector<Clause> out;
    out.reserve(cs.size());
    for (const auto& c : cs) {
        if (std::find(c.begin(), c.end(), lit) != c.end()) continue;
        Clause r;
        for (int l : c)
            if (l != -lit) r.push_back(l);
        out.push_back(std::move(r));
    }
    return out;
}

void write_bool(TokenWriter& w, bool v) { w << (v ? "True" : "False"); }

void write_lit(TokenWriter& w, int lit) {
    if (lit < 0) w << kNot;
    w << std::abs(lit);
}

class Dpll {
public:
    explicit Dpll(TokenSeq& out) : w_(out) {}

    bool call(const std::vector<Clause>& cs) {
        w_ << kCall << "Question:";
        write_cnf(w_, cs);
        bool r = body(cs);
        w_ << kSep << "Answer:";
        write_bool(w_, r);
        w_ << kReturn;
        return r;
    }

private:
    bool body(const std::vector<Clause>& cs) {
        if (has_empty_clause(cs)) return false;
        if (cs.empty()) return true;
        for (const auto& c : cs) {
            if (c.size() != 1) continue;
            int lit = c[0];
            w_ << "Found";
            write_lit(w_, lit);
            w_ << "Let" << std::abs(lit) << "=";
            write_bool(w_, lit > 0);
            auto rest = assign(cs, lit);
            if (has_empty_clause(rest)) return false;
            if (rest.empty()) return true;
            return call(rest);
        }
        int v = 0;
        for (const auto& c : cs)
            for (int l : c)
                if (v == 0 || std::abs(l) < v) v = std::abs(l);
        w_ << "Try" << v << "=" << "True";
        if (call(assign(cs, v))) return true;
        w_ << "Try" << v << "=" << "False";
        return call(assign(cs, -v));
    }

    TokenWriter w_;
};

}  // namespace

void validate(const CnfFormula& f) {
    if (f.n_vars < 0) throw TaskError("cnf: negative variable count");
    for (std::size_t i = 0; i < f.clauses.size(); ++i)
        for (int l : f.clauses[i])
            if (l == 0 || std::abs(l) > f.n_vars)
                throw TaskError("cnf: clause " + std::to_string(i + 1) + " has literal " + std::to_string(l) +
                                " outside 1.." + std::to_string(f.n_vars));
}

CnfFormula gen_sat(int n, std::uint64_t seed) {
    if (n < 3) throw TaskError("gen_sat: n must be at least 3, got " + std::to_string(n));
    Rng rng(seed);
    CnfFormula f;
    f.n_vars = n;
    const int m = (43 * n + 5) / 10;
    std::vector<int> vars(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vars[static_cast<std::size_t>(i)] = i + 1;
    for (int k = 0; k < m; ++k) {
        // partial Fisher-Yates for three distinct variables
        Clause c;
        for (std::size_t i = 0; i < 3; ++i) {
            std::size_t j = i + rng.below(vars.size() - i);
            std::swap(vars[i], vars[j]);
            c.push_back(rng.coin() ? vars[i] : -vars[i]);
        }
        f.clauses.push_back(std::move(c));
    }
    return f;
}

bool brute_force_sat(const CnfFormula& f) {
    validate(f);
    if (f.n_vars > 24) throw TaskError("brute_force_sat: more than 24 variables");
    const std::uint64_t total = std::uint64_t(1) << f.n_vars;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        bool all = true;
        for (const auto& c : f.clauses) {
            bool any = false;
            for (int l : c) {
                bool val = (mask >> (std::abs(l) - 1)) & 1;
                if ((l > 0) == val) {
                    any = true;
                    break;
                }
            }
            if (!any) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

void write_cnf(TokenWriter& w, const std::vector<Clause>& clauses) {
    for (std::size_t i = 0; i < clauses.size(); ++i) {
        if (i) w << kAnd;
        w << "(";
        for (std::size_t j = 0; j < clauses[i].size(); ++j) {
            if (j) w << kOr;
            write_lit(w, clauses[i][j]);
        }
        w << ")";
    }
}

std::string format_cnf(const std::vector<Clause>& clauses) {
    TokenSeq s;
    TokenWriter w(s);
    write_cnf(w, clauses);
    return to_string(s);
}

TokenSeq sat_prompt(const CnfFormula& f) {
    TokenSeq s;
    TokenWriter w(s);
    w << kStartOfText;
    write_cnf(w, f.clauses);
    w << kEndOfPrompt;
    return s;
}

SatTrace dpll_trace(const CnfFormula& f) {
    validate(f);
    SatTrace t;
    t.prompt = sat_prompt(f);
    Dpll d(t.response);
    t.answer = d.call(f.clauses);
    t.response.push_back(kEndOfText);
    return t;
}

CnfFormula parse_sat_prompt(std::string_view text, int n_vars) {
    auto toks = tokenize(text);
    std::size_t i = 0, end = toks.size();
    if (i < end && toks[i] == kStartOfText) ++i;
    if (end > i && toks[end - 1] == kEndOfPrompt) --end;
    CnfFormula f;
    int max_var = 0;
    auto expect = [&](const std::string& s) {
        if (i >= end || toks[i].surface() != s)
            throw TaskError("sat prompt: expected '" + s + "' at token " + std::to_string(i));
        ++i;
    };
    while (i < end) {
        if (!f.clauses.empty()) expect(kAnd);
        expect("(");
        Clause c;
        while (i < end && toks[i].surface() != ")") {
            if (!c.empty()) expect(kOr);
            int sign = 1;
            if (i < end && toks[i].surface() == kNot) {
                sign = -1;
                ++i;
            }
            if (i >= end) throw TaskError("sat prompt: truncated clause");
            int v = 0;
            try {
                std::size_t used = 0;
                v = std::stoi(toks[i].surface(), &used);
                if (used != toks[i].surface().size() || v <= 0) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw TaskError("sat prompt: bad variable '" + toks[i].surface() + "'");
            }
            ++i;
            max_var = std::max(max_var, v);
            c.push_back(sign * v);
        }
        expect(")");
        f.clauses.push_back(std::move(c));
    }
    f.n_vars = n_vars ? n_vars : max_var;
    validate(f);
    return f;
}

}  // namespace pencil
