#include "pencil/qbf.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>

#include "pencil/rng.hpp"

namespace pencil {

namespace {

const std::string kForall = "∀";
const std::string kExists = "∃";

const std::string& quant_symbol(Quant q) { return q == Quant::Forall ? kForall : kExists; }

void write_bool(TokenWriter& w, bool v) { w << (v ? "True" : "False"); }

void write_clause(TokenWriter& w, const Clause& c) {
    w << "(";
    for (std::size_t j = 0; j < c.size(); ++j) {
        if (j) w << "∨";
        if (c[j] < 0) w << "¬";
        w << std::abs(c[j]);
    }
    w << ")";
}

class Expander {
public:
    Expander(const QbfFormula& f, TokenSeq& out) : f_(f), w_(out) {
        for (const auto& [q, v] : f.prefix) value_[v] = false;
    }

    bool call(std::size_t level) {
        w_ << kCall << "Question:";
        bool r;
        if (level == f_.prefix.size()) {
            r = evaluate();
        } else {
            auto [q, v] = f_.prefix[level];
            w_ << "prefix_from" << quant_symbol(q) << v;
            r = expand(level, q, v);
        }
        w_ << kSep << "Answer:";
        write_bool(w_, r);
        w_ << kReturn;
        return r;
    }

private:
    bool expand(std::size_t level, Quant q, int v) {
        const bool decisive = q == Quant::Exists;
        bool r = !decisive;
        for (bool val : {false, true}) {
            w_ << "Try" << v << "=";
            write_bool(w_, val);
            value_[v] = val;
            bool child = call(level + 1);
            if (child == decisive) {
                r = decisive;
                break;
            }
        }
        value_[v] = false;
        return r;
    }

    bool evaluate() {
        w_ << "evaluate";
        for (const auto& [v, val] : value_) {
            w_ << v << "=";
            write_bool(w_, val);
        }
        for (std::size_t k = 0; k < f_.clauses.size(); ++k) {
            const Clause& c = f_.clauses[k];
            bool sat = std::any_of(c.begin(), c.end(), [&](int l) { return value_.at(std::abs(l)) == (l > 0); });
            w_ << "Check" << ("#" + std::to_string(k));
            write_clause(w_, c);
            write_bool(w_, sat);
            if (!sat) return false;
        }
        w_ << "Formula" << "=" << "True";
        return true;
    }

    const QbfFormula& f_;
    TokenWriter w_;
    std::map<int, bool> value_;  // sorted by variable for the evaluate line
};

int parse_var(const Token& t) {
    const std::string& s = t.surface();
    std::size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || v <= 0) throw TaskError("qbf prompt: bad variable '" + s + "'");
    return v;
}

}  // namespace

void validate(const QbfFormula& f) {
    std::set<int> seen;
    for (const auto& [q, v] : f.prefix) {
        if (v <= 0) throw TaskError("qbf: non-positive variable " + std::to_string(v));
        if (!seen.insert(v).second) throw TaskError("qbf: variable " + std::to_string(v) + " quantified twice");
    }
    for (std::size_t i = 0; i < f.clauses.size(); ++i)
        for (int l : f.clauses[i])
            if (l == 0 || !seen.count(std::abs(l)))
                throw TaskError("qbf: clause " + std::to_string(i + 1) + " uses unquantified literal " +
                                std::to_string(l));
}

QbfFormula gen_qbf(int n, std::uint64_t seed, const QbfGenConfig& cfg) {
    if (n < 1) throw TaskError("gen_qbf: n must be positive, got " + std::to_string(n));
    if (cfg.min_width < 1 || cfg.max_width < cfg.min_width) throw TaskError("gen_qbf: bad clause width range");
    Rng rng(seed);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
    rng.shuffle(order);
    QbfFormula f;
    for (int v : order) f.prefix.emplace_back(rng.coin() ? Quant::Exists : Quant::Forall, v);
    const int m = cfg.clauses_per_var * n;
    for (int k = 0; k < m; ++k) {
        int width = rng.uniform_int(cfg.min_width, cfg.max_width);
        Clause c;
        for (int j = 0; j < width; ++j) {
            int v = rng.uniform_int(1, n);
            c.push_back(rng.coin() ? v : -v);
        }
        f.clauses.push_back(std::move(c));
    }
    return f;
}

bool brute_force_qbf(const QbfFormula& f) {
    validate(f);
    const std::size_t n = f.prefix.size();
    if (n > 22) throw TaskError("brute_force_qbf: more than 22 variables");
    std::map<int, std::size_t> bit;  // variable -> bit, bit 0 is the innermost
    for (std::size_t i = 0; i < n; ++i) bit[f.prefix[i].second] = n - 1 - i;
    std::vector<char> table(std::size_t(1) << n);
    for (std::size_t mask = 0; mask < table.size(); ++mask) {
        bool all = true;
        for (const auto& c : f.clauses) {
            bool any = false;
            for (int l : c)
                if ((((mask >> bit[std::abs(l)]) & 1) != 0) == (l > 0)) any = true;
            if (!any) {
                all = false;
                break;
            }
        }
        table[mask] = all;
    }
    // fold away the innermost variable each round
    for (std::size_t i = n; i-- > 0;) {
        const bool exists = f.prefix[i].first == Quant::Exists;
        std::vector<char> next(table.size() / 2);
        for (std::size_t j = 0; j < next.size(); ++j) {
            bool a = table[2 * j], b = table[2 * j + 1];
            next[j] = exists ? (a || b) : (a && b);
        }
        table.swap(next);
    }
    return table[0];
}

TokenSeq qbf_prompt(const QbfFormula& f) {
    TokenSeq s;
    TokenWriter w(s);
    w << kStartOfText;
    for (const auto& [q, v] : f.prefix) w << quant_symbol(q) << v;
    w << ":";
    for (std::size_t k = 0; k < f.clauses.size(); ++k) {
        w << ("#" + std::to_string(k + 1));
        write_clause(w, f.clauses[k]);
    }
    w << kEndOfPrompt;
    return s;
}

QbfTrace qbf_trace(const QbfFormula& f) {
    validate(f);
    QbfTrace t;
    t.prompt = qbf_prompt(f);
    Expander e(f, t.response);
    t.answer = e.call(0);
    t.response.push_back(kEndOfText);
    return t;
}

QbfFormula parse_qbf_prompt(std::string_view text) {
    auto toks = tokenize(text);
    std::size_t i = 0, end = toks.size();
    if (i < end && toks[i] == kStartOfText) ++i;
    if (end > i && toks[end - 1] == kEndOfPrompt) --end;
    QbfFormula f;
    while (i < end && toks[i].surface() != ":") {
        const std::string& s = toks[i].surface();
        Quant q;
        if (s == kForall) q = Quant::Forall;
        else if (s == kExists) q = Quant::Exists;
        else throw TaskError("qbf prompt: expected quantifier, got '" + s + "'");
        if (++i >= end) throw TaskError("qbf prompt: truncated prefix");
        f.prefix.emplace_back(q, parse_var(toks[i++]));
    }
    if (i >= end) throw TaskError("qbf prompt: missing ':'");
    ++i;
    while (i < end) {
        std::string want = "#" + std::to_string(f.clauses.size() + 1);
        if (toks[i].surface() != want) throw TaskError("qbf prompt: expected " + want);
        if (++i >= end || toks[i].surface() != "(") throw TaskError("qbf prompt: expected '('");
        ++i;
        Clause c;
        while (i < end && toks[i].surface() != ")") {
            if (!c.empty()) {
                if (toks[i].surface() != "∨") throw TaskError("qbf prompt: expected '∨'");
                ++i;
            }
            int sign = 1;
            if (i < end && toks[i].surface() == "¬") {
                sign = -1;
                ++i;
            }
            if (i >= end) throw TaskError("qbf prompt: truncated clause");
            c.push_back(sign * parse_var(toks[i++]));
        }
        if (i >= end) throw TaskError("qbf prompt: unterminated clause");
        ++i;
        f.clauses.push_back(std::move(c));
    }
    validate(f);
    return f;
}

}  // namespace pencil
