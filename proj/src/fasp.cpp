#include "pencil/fasp.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace pencil::fasp {

namespace {

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Matrix identity(std::size_t d, Rational c = 1) {
    Matrix m(d, Vec(d, 0));
    for (std::size_t i = 0; i < d; ++i) m[i][i] = c;
    return m;
}

std::string kind_name(NodeKind k) {
    switch (k) {
        case NodeKind::TokenEmbedding: return "token_embedding";
        case NodeKind::SeqLen: return "seq_len";
        case NodeKind::Concat: return "concat";
        case NodeKind::Aha: return "aha";
        case NodeKind::Linear: return "linear";
        case NodeKind::Relu: return "relu";
        case NodeKind::Square: return "square";
        case NodeKind::Multiply: return "multiply";
    }
    return "?";
}

std::string to_string(const Rational& r) {
    std::ostringstream o;
    o << r;
    return o.str();
}

Rational dot(const Vec& a, const Vec& b) {
    Rational s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != 0 && b[i] != 0) s += a[i] * b[i];
    return s;
}

Program& owner(Expr a) {
    if (!a.program) throw FaspError("fasp: empty expression");
    return *a.program;
}

Program& owner(Expr a, Expr b) {
    if (a.program != b.program) throw FaspError("fasp: expressions from different programs");
    return owner(a);
}

void same_dim(Expr a, Expr b, const char* op) {
    if (a.dim() != b.dim())
        throw FaspError(std::string("fasp: ") + op + " needs equal dimensions, got " + std::to_string(a.dim()) +
                        " and " + std::to_string(b.dim()));
}

void scalar(Expr a, const char* op) {
    if (a.dim() != 1) throw FaspError(std::string("fasp: ") + op + " needs a scalar argument");
}

Expr boolean(Expr e) {
    owner(e).mark_boolean(e);
    return e;
}

}  // namespace

Rational Rational::make(__int128 n, __int128 d) {
    if (d == 0) throw FaspError("fasp: division by zero");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const __int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    constexpr auto lo = std::numeric_limits<std::int64_t>::min() + 1;
    constexpr auto hi = std::numeric_limits<std::int64_t>::max();
    if (n < lo || n > hi || d > hi) throw FaspError("fasp: rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
}

std::ostream& operator<<(std::ostream& o, const Rational& r) {
    o << r.numerator();
    if (r.denominator() != 1) o << "/" << r.denominator();
    return o;
}

Rational::Rational(std::int64_t n, std::int64_t d) { *this = make(n, d); }

Rational& Rational::operator+=(const Rational& o) {
    if (den_ == 1 && o.den_ == 1) return *this = make(static_cast<__int128>(num_) + o.num_, 1);
    return *this = make(static_cast<__int128>(num_) * o.den_ + static_cast<__int128>(o.num_) * den_,
                        static_cast<__int128>(den_) * o.den_);
}

Rational& Rational::operator-=(const Rational& o) { return *this += -o; }

Rational& Rational::operator*=(const Rational& o) {
    return *this = make(static_cast<__int128>(num_) * o.num_, static_cast<__int128>(den_) * o.den_);
}

Rational& Rational::operator/=(const Rational& o) {
    return *this = make(static_cast<__int128>(num_) * o.den_, static_cast<__int128>(den_) * o.num_);
}

Rational Rational::operator-() const {
    Rational r = *this;
    r.num_ = -r.num_;
    return r;
}

Vec hardmax(const Vec& v) {
    if (v.empty()) throw FaspError("hardmax of an empty vector");
    Rational best = *std::max_element(v.begin(), v.end());
    std::int64_t count = std::count(v.begin(), v.end(), best);
    Vec out(v.size(), 0);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == best) out[i] = Rational(1, count);
    return out;
}

std::size_t Expr::dim() const { return program->node(id).dim; }

Expr Program::add_node(Node n) {
    for (int a : n.args)
        if (a < 0 || a >= static_cast<int>(nodes_.size())) throw FaspError("fasp: reference to an undefined node");
    nodes_.push_back(std::move(n));
    return Expr{this, static_cast<int>(nodes_.size()) - 1};
}

void Program::check(Expr e) const {
    if (e.program != this || e.id < 0 || e.id >= static_cast<int>(nodes_.size()))
        throw FaspError("fasp: expression does not belong to this program");
}

Expr Program::token_embedding(std::unordered_map<Token, Vec> table, std::size_t dim) {
    for (const auto& [t, v] : table)
        if (v.size() != dim) throw FaspError("fasp: token embedding row for '" + t.surface() + "' has wrong size");
    Node n;
    n.kind = NodeKind::TokenEmbedding;
    n.dim = dim;
    n.table = std::move(table);
    return add_node(std::move(n));
}

Expr Program::token_embedding(std::unordered_map<Token, Vec> table, Vec fallback) {
    Expr e = token_embedding(std::move(table), fallback.size());
    nodes_.back().has_fallback = true;
    nodes_.back().fallback = std::move(fallback);
    return e;
}

Expr Program::seq_len() {
    Node n;
    n.kind = NodeKind::SeqLen;
    return add_node(std::move(n));
}

Expr Program::concat(const std::vector<Expr>& parts) {
    if (parts.empty()) throw FaspError("fasp: empty concat");
    Node n;
    n.kind = NodeKind::Concat;
    n.dim = 0;
    for (Expr e : parts) {
        check(e);
        n.args.push_back(e.id);
        n.dim += e.dim();
    }
    return add_node(std::move(n));
}

Expr Program::aha(Expr q, Expr k, Expr v) {
    check(q);
    check(k);
    check(v);
    if (q.dim() != k.dim()) throw FaspError("fasp: aha query and key dimensions differ");
    Node n;
    n.kind = NodeKind::Aha;
    n.args = {q.id, k.id, v.id};
    n.dim = v.dim();
    return add_node(std::move(n));
}

Expr Program::linear(Matrix m, Expr x) {
    check(x);
    if (m.empty()) throw FaspError("fasp: empty matrix");
    for (const auto& row : m)
        if (row.size() != x.dim()) throw FaspError("fasp: matrix width does not match its input");
    Node n;
    n.kind = NodeKind::Linear;
    n.args = {x.id};
    n.dim = m.size();
    n.matrix = std::move(m);
    return add_node(std::move(n));
}

Expr Program::relu(Expr x) {
    check(x);
    Node n;
    n.kind = NodeKind::Relu;
    n.args = {x.id};
    n.dim = x.dim();
    return add_node(std::move(n));
}

Expr Program::square(Expr x) {
    check(x);
    Node n;
    n.kind = NodeKind::Square;
    n.args = {x.id};
    n.dim = x.dim();
    return add_node(std::move(n));
}

Expr Program::multiply(Expr a, Expr b) {
    check(a);
    check(b);
    same_dim(a, b, "multiply");
    Node n;
    n.kind = NodeKind::Multiply;
    n.args = {a.id, b.id};
    n.dim = a.dim();
    return add_node(std::move(n));
}

Expr Program::one() {
    if (one_ < 0) {
        one_ = token_embedding({}, Vec{1}).id;
        nodes_[static_cast<std::size_t>(one_)].name = "one";
    }
    return Expr{this, one_};
}

Expr Program::constant(const Vec& v) {
    Matrix m;
    for (const auto& x : v) m.push_back(Vec{x});
    return linear(std::move(m), one());
}

Expr Program::define(const std::string& name, Expr e) {
    check(e);
    if (names_.count(name)) throw FaspError("fasp: '" + name + "' defined twice");
    names_[name] = e.id;
    auto& n = nodes_[static_cast<std::size_t>(e.id)];
    if (n.name.empty()) n.name = name;
    else n.name += ", " + name;
    return e;
}

void Program::mark_boolean(Expr e) {
    check(e);
    nodes_[static_cast<std::size_t>(e.id)].boolean = true;
}

void Program::set_result(Expr e, std::vector<Token> vocab) {
    check(e);
    if (e.dim() != vocab.size()) throw FaspError("fasp: result dimension differs from the vocabulary size");
    result_ = e.id;
    vocab_ = std::move(vocab);
}

int Program::lookup(const std::string& name) const {
    auto it = names_.find(name);
    return it == names_.end() ? -1 : it->second;
}

std::string Program::dump() const {
    std::ostringstream o;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        o << "%" << i << " [" << n.dim << (n.boolean ? ", bool" : "") << "] = " << kind_name(n.kind) << "(";
        for (std::size_t j = 0; j < n.args.size(); ++j) o << (j ? ", " : "") << "%" << n.args[j];
        if (n.kind == NodeKind::Linear) {
            o << (n.args.empty() ? "" : ", ") << "[";
            for (std::size_t r = 0; r < n.matrix.size(); ++r) {
                o << (r ? "; " : "");
                for (std::size_t c = 0; c < n.matrix[r].size(); ++c) o << (c ? " " : "") << to_string(n.matrix[r][c]);
            }
            o << "]";
        } else if (n.kind == NodeKind::TokenEmbedding) {
            o << n.table.size() << " rows" << (n.has_fallback ? " + fallback" : "");
        }
        o << ")";
        if (!n.name.empty()) o << "  # " << n.name;
        o << "\n";
    }
    if (result_ >= 0) o << "result = %" << result_ << "\n";
    return o.str();
}

void Evaluator::push(Token t) {
    const std::size_t pos = values_.size();
    values_.emplace_back(p_.size());
    tokens_.push_back(t);
    auto& cur = values_.back();
    for (std::size_t i = 0; i < p_.size(); ++i) {
        const Node& n = p_.node(static_cast<int>(i));
        Vec out;
        switch (n.kind) {
            case NodeKind::TokenEmbedding: {
                auto it = n.table.find(t);
                if (it != n.table.end()) out = it->second;
                else if (n.has_fallback) out = n.fallback;
                else throw FaspError("fasp: token '" + t.surface() + "' is outside the program vocabulary");
                break;
            }
            case NodeKind::SeqLen: out = {Rational(static_cast<std::int64_t>(pos + 1))}; break;
            case NodeKind::Concat:
                for (int a : n.args) {
                    const Vec& v = cur[static_cast<std::size_t>(a)];
                    out.insert(out.end(), v.begin(), v.end());
                }
                break;
            case NodeKind::Aha: {
                const Vec& q = cur[static_cast<std::size_t>(n.args[0])];
                Vec scores(pos + 1);
                for (std::size_t j = 0; j <= pos; ++j) scores[j] = dot(q, values_[j][static_cast<std::size_t>(n.args[1])]);
                Vec w = hardmax(scores);
                out.assign(n.dim, 0);
                for (std::size_t j = 0; j <= pos; ++j) {
                    if (w[j] == 0) continue;
                    const Vec& v = values_[j][static_cast<std::size_t>(n.args[2])];
                    for (std::size_t c = 0; c < n.dim; ++c)
                        if (v[c] != 0) out[c] += w[j] * v[c];
                }
                break;
            }
            case NodeKind::Linear: {
                const Vec& x = cur[static_cast<std::size_t>(n.args[0])];
                out.reserve(n.dim);
                for (const auto& row : n.matrix) out.push_back(dot(row, x));
                break;
            }
            case NodeKind::Relu:
                out = cur[static_cast<std::size_t>(n.args[0])];
                for (auto& x : out)
                    if (x < 0) x = 0;
                break;
            case NodeKind::Square:
                out = cur[static_cast<std::size_t>(n.args[0])];
                for (auto& x : out) x *= x;
                break;
            case NodeKind::Multiply: {
                const Vec& a = cur[static_cast<std::size_t>(n.args[0])];
                const Vec& b = cur[static_cast<std::size_t>(n.args[1])];
                out.resize(n.dim);
                for (std::size_t c = 0; c < n.dim; ++c) out[c] = a[c] * b[c];
                break;
            }
        }
        if (check_ && n.boolean)
            for (const auto& x : out)
                if (x != 0 && x != 1)
                    throw FaspError("fasp: boolean node %" + std::to_string(i) + (n.name.empty() ? "" : " (" + n.name + ")") +
                                    " evaluated to " + to_string(x) + " at position " + std::to_string(pos + 1));
        cur[i] = std::move(out);
    }
}

void Evaluator::assign(const TokenSeq& seq) {
    std::size_t common = 0;
    while (common < seq.size() && common < tokens_.size() && seq[common] == tokens_[common]) ++common;
    values_.resize(common);
    tokens_.resize(common);
    for (std::size_t i = common; i < seq.size(); ++i) push(seq[i]);
}

const Vec& Evaluator::value(int id) const {
    if (values_.empty()) throw FaspError("fasp: evaluation of an empty sequence");
    return values_.back().at(static_cast<std::size_t>(id));
}

Vec eval(const Program& p, Expr e, const TokenSeq& seq) {
    if (seq.empty()) throw FaspError("fasp: evaluation of an empty sequence");
    Evaluator ev(p);
    ev.assign(seq);
    return ev.value(e);
}

Token decode(const Program& p, const Vec& result) {
    if (result.size() != p.vocab().size()) throw FaspError("fasp: result size differs from the vocabulary");
    auto best = std::max_element(result.begin(), result.end());
    if (std::count(result.begin(), result.end(), *best) != 1) {
        std::string tied;
        for (std::size_t i = 0; i < result.size(); ++i)
            if (result[i] == *best) tied += " " + p.vocab()[i].surface();
        throw AmbiguousDecode("fasp: tied argmax between" + tied);
    }
    return p.vocab()[static_cast<std::size_t>(best - result.begin())];
}

Token next_token(const Program& p, const TokenSeq& seq) { return decode(p, eval(p, p.result(), seq)); }

Token next_token(Evaluator& ev, const Program& p, const TokenSeq& seq) {
    if (seq.empty()) throw FaspError("fasp: evaluation of an empty sequence");
    ev.assign(seq);
    return decode(p, ev.value(p.result()));
}

// ---- operator library ----

Expr add(Expr a, Expr b) {
    Program& p = owner(a, b);
    same_dim(a, b, "add");
    const std::size_t d = a.dim();
    Matrix m(d, Vec(2 * d, 0));
    for (std::size_t i = 0; i < d; ++i) m[i][i] = m[i][d + i] = 1;
    return p.linear(std::move(m), p.concat({a, b}));
}

Expr minus(Expr a, Expr b) {
    Program& p = owner(a, b);
    same_dim(a, b, "minus");
    const std::size_t d = a.dim();
    Matrix m(d, Vec(2 * d, 0));
    for (std::size_t i = 0; i < d; ++i) {
        m[i][i] = 1;
        m[i][d + i] = -1;
    }
    return p.linear(std::move(m), p.concat({a, b}));
}

Expr scale(Rational c, Expr a) { return owner(a).linear(identity(a.dim(), c), a); }
Expr neg(Expr a) { return scale(-1, a); }

Expr add_const(Expr a, Rational c) {
    Program& p = owner(a);
    return add(a, p.constant(Vec(a.dim(), c)));
}

Expr slice(Expr a, std::size_t begin, std::size_t end) {
    if (begin >= end || end > a.dim()) throw FaspError("fasp: bad slice");
    Matrix m(end - begin, Vec(a.dim(), 0));
    for (std::size_t i = begin; i < end; ++i) m[i - begin][i] = 1;
    return owner(a).linear(std::move(m), a);
}

Expr broadcast(Expr s, std::size_t dim) {
    scalar(s, "broadcast");
    return owner(s).linear(Matrix(dim, Vec{1}), s);
}

Expr sum_coords(Expr a) { return owner(a).linear(Matrix{Vec(a.dim(), 1)}, a); }

Expr max(Expr a, Expr b) { return add(owner(a, b).relu(minus(a, b)), b); }
Expr min(Expr a, Expr b) { return minus(b, owner(a, b).relu(minus(b, a))); }

Expr not_(Expr a) {
    Program& p = owner(a);
    return boolean(minus(p.constant(Vec(a.dim(), 1)), a));
}

Expr and_(Expr a, Expr b) { return boolean(min(a, b)); }
Expr or_(Expr a, Expr b) { return boolean(not_(and_(not_(a), not_(b)))); }
Expr xor_(Expr a, Expr b) { return boolean(and_(or_(a, b), not_(and_(a, b)))); }

Expr leq(Expr a, Expr b) {
    Program& p = owner(a, b);
    Expr diff = minus(b, a);
    return boolean(minus(p.relu(add_const(diff, 1)), p.relu(diff)));
}

Expr geq(Expr a, Expr b) { return leq(b, a); }
Expr equal(Expr a, Expr b) { return and_(leq(a, b), leq(b, a)); }

Expr all_equal(Expr a, Expr b) {
    Program& p = owner(a, b);
    Expr mismatches = sum_coords(not_(equal(a, b)));
    return leq(mismatches, p.constant(Vec{0}));
}

Expr less(Expr a, Expr b) { return leq(a, add_const(b, -1)); }
Expr greater(Expr a, Expr b) { return less(b, a); }
Expr neq(Expr a, Expr b) { return not_(equal(a, b)); }

Expr geq0(Expr a) {
    Program& p = owner(a);
    return boolean(minus(p.relu(add_const(a, 1)), p.relu(a)));
}

Expr kron(Expr a, Expr b) {
    Program& p = owner(a, b);
    const std::size_t da = a.dim(), db = b.dim();
    Matrix ea(da * db, Vec(da, 0)), eb(da * db, Vec(db, 0));
    for (std::size_t i = 0; i < da; ++i)
        for (std::size_t j = 0; j < db; ++j) {
            ea[i * db + j][i] = 1;
            eb[i * db + j][j] = 1;
        }
    return and_(p.linear(std::move(ea), a), p.linear(std::move(eb), b));
}

Expr average(Expr a) {
    Program& p = owner(a);
    return p.aha(p.one(), p.one(), a);
}

// The query is the constant 1 so the largest key wins regardless of the sign
// of the current value.
Expr seq_max(Expr a) {
    scalar(a, "seq_max");
    Program& p = owner(a);
    return p.aha(p.one(), a, a);
}

Expr seq_min(Expr a) { return neg(seq_max(neg(a))); }
Expr seq_and(Expr a) { return boolean(seq_min(a)); }
Expr seq_or(Expr a) { return boolean(seq_max(a)); }

Expr if_then_else(Expr cond, Expr t, Expr f) {
    Program& p = owner(cond, t);
    scalar(cond, "if_then_else condition");
    same_dim(t, f, "if_then_else");
    Expr c = broadcast(cond, t.dim());
    Expr nc = broadcast(not_(cond), t.dim());
    return add(p.multiply(c, t), p.multiply(nc, f));
}

Expr inv_seq_len(Program& p) {
    int id = p.lookup("inv_seq_len");
    if (id >= 0) return Expr{&p, id};
    return p.define("inv_seq_len", average(equal(p.seq_len(), p.constant(Vec{1}))));
}

Expr is_pos_k(Program& p, std::int64_t k) {
    Expr scaled = scale(Rational(k * (k + 1)), inv_seq_len(p));
    Expr first = add_const(neg(scaled), Rational(k + 1));
    Expr second = add_const(scaled, Rational(-k - 1));
    return and_(geq0(first), geq0(second));
}

// Ties go to the latest position: the extra key coordinate -1/j grows with j.
Expr rha(Expr q, Expr k, Expr v) {
    Program& p = owner(q, k);
    return p.aha(p.concat({q, p.one()}), p.concat({k, neg(inv_seq_len(p))}), v);
}

Expr rightmost_best_match(Expr q, Expr k, Expr v) {
    Program& p = owner(q, k);
    same_dim(q, k, "rightmost_best_match");
    Expr kk = sum_coords(p.square(k));
    return rha(p.concat({q, p.one()}), p.concat({scale(2, k), neg(kk)}), v);
}

// The value comes from the matched position, not the current one.
Expr rightmost_exact_match(Expr q, Expr k, Expr v, Expr d) {
    return if_then_else(all_equal(rightmost_best_match(q, k, k), q), rightmost_best_match(q, k, v), d);
}

Expr sum(Expr a) {
    Program& p = owner(a);
    return p.multiply(average(a), broadcast(p.seq_len(), a.dim()));
}

}  // namespace pencil::fasp
