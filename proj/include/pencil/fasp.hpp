#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pencil/core.hpp"
#include "pencil/turing.hpp"

namespace pencil::fasp {

// Exact fraction over int64, always normalized with a positive denominator.
// Overflow raises FaspError instead of wrapping.
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t n) : num_(n) {}  // NOLINT: integers convert implicitly
    Rational(std::int64_t n, std::int64_t d);

    std::int64_t numerator() const { return num_; }
    std::int64_t denominator() const { return den_; }

    Rational& operator+=(const Rational& o);
    Rational& operator-=(const Rational& o);
    Rational& operator*=(const Rational& o);
    Rational& operator/=(const Rational& o);
    Rational operator-() const;

    friend Rational operator+(Rational a, const Rational& b) { return a += b; }
    friend Rational operator-(Rational a, const Rational& b) { return a -= b; }
    friend Rational operator*(Rational a, const Rational& b) { return a *= b; }
    friend Rational operator/(Rational a, const Rational& b) { return a /= b; }
    friend bool operator==(const Rational&, const Rational&) = default;
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        return static_cast<__int128>(a.num_) * b.den_ <=> static_cast<__int128>(b.num_) * a.den_;
    }

private:
    static Rational make(__int128 n, __int128 d);
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

std::ostream& operator<<(std::ostream& o, const Rational& r);

using Vec = std::vector<Rational>;
using Matrix = std::vector<Vec>;  // rows

class FaspError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AmbiguousDecode : public FaspError {
public:
    using FaspError::FaspError;
};

// Uniform mass over the maximizers.
Vec hardmax(const Vec& v);

enum class NodeKind { TokenEmbedding, SeqLen, Concat, Aha, Linear, Relu, Square, Multiply };

struct Node {
    NodeKind kind = NodeKind::SeqLen;
    std::vector<int> args;  // indices of earlier nodes
    std::size_t dim = 1;
    std::string name;
    bool boolean = false;  // every coordinate is expected to be 0 or 1
    std::unordered_map<Token, Vec> table;
    bool has_fallback = false;
    Vec fallback;
    Matrix matrix;
};

class Program;

// Handle to a node of a program under construction.
struct Expr {
    Program* program = nullptr;
    int id = -1;
    std::size_t dim() const;
};

class Program {
public:
    Program() = default;
    Program(const Program&) = delete;
    Program& operator=(const Program&) = delete;
    Program(Program&&) = default;
    Program& operator=(Program&&) = default;

    // Primitives. Dimension errors are raised here, never during evaluation.
    Expr token_embedding(std::unordered_map<Token, Vec> table, std::size_t dim);
    Expr token_embedding(std::unordered_map<Token, Vec> table, Vec fallback);
    Expr seq_len();
    Expr concat(const std::vector<Expr>& parts);
    Expr aha(Expr q, Expr k, Expr v);
    Expr linear(Matrix m, Expr x);
    Expr relu(Expr x);
    Expr square(Expr x);
    Expr multiply(Expr a, Expr b);

    // Shared helpers built from the primitives.
    Expr one();  // constant 1 embedding of every token
    Expr constant(const Vec& v);

    Expr define(const std::string& name, Expr e);
    void mark_boolean(Expr e);

    void set_result(Expr e, std::vector<Token> vocab);
    Expr result() const { return Expr{const_cast<Program*>(this), result_}; }
    const std::vector<Token>& vocab() const { return vocab_; }

    const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return nodes_.size(); }
    int lookup(const std::string& name) const;  // -1 if absent

    // One line per node: "%12 = relu(%11)  # name".
    std::string dump() const;

private:
    Expr add_node(Node n);
    void check(Expr e) const;

    std::vector<Node> nodes_;
    std::unordered_map<std::string, int> names_;
    int one_ = -1;
    int result_ = -1;
    std::vector<Token> vocab_;
};

// Memoized evaluation over a growing prefix: push() computes every node at
// the new position only.
class Evaluator {
public:
    explicit Evaluator(const Program& p, bool check_types = false) : p_(p), check_(check_types) {}
    void reset() { values_.clear(); tokens_.clear(); }
    void push(Token t);
    // Reuses the longest common prefix with what was pushed before.
    void assign(const TokenSeq& seq);
    std::size_t length() const { return values_.size(); }
    const Vec& value(int id) const;  // at the last position
    const Vec& value(Expr e) const { return value(e.id); }
    const Vec& value_at(int id, std::size_t pos) const { return values_.at(pos).at(static_cast<std::size_t>(id)); }

private:
    const Program& p_;
    bool check_;
    TokenSeq tokens_;
    std::vector<std::vector<Vec>> values_;  // [position][node]
};

Vec eval(const Program& p, Expr e, const TokenSeq& seq);
// Unique argmax of the result over the program vocabulary.
Token decode(const Program& p, const Vec& result);
Token next_token(const Program& p, const TokenSeq& seq);
Token next_token(Evaluator& ev, const Program& p, const TokenSeq& seq);

// Operator library; all elaborate to the primitives above.
Expr add(Expr a, Expr b);
Expr minus(Expr a, Expr b);
Expr neg(Expr a);
Expr scale(Rational c, Expr a);
Expr add_const(Expr a, Rational c);
Expr slice(Expr a, std::size_t begin, std::size_t end);
Expr broadcast(Expr scalar, std::size_t dim);
Expr sum_coords(Expr a);
Expr max(Expr a, Expr b);
Expr min(Expr a, Expr b);
Expr not_(Expr a);
Expr and_(Expr a, Expr b);
Expr or_(Expr a, Expr b);
Expr xor_(Expr a, Expr b);
Expr leq(Expr a, Expr b);
Expr geq(Expr a, Expr b);
Expr equal(Expr a, Expr b);  // coordinatewise
Expr all_equal(Expr a, Expr b);  // scalar
Expr less(Expr a, Expr b);
Expr greater(Expr a, Expr b);
Expr neq(Expr a, Expr b);
Expr geq0(Expr a);
Expr kron(Expr a, Expr b);
Expr average(Expr a);
Expr seq_max(Expr a);
Expr seq_min(Expr a);
Expr seq_and(Expr a);
Expr seq_or(Expr a);
Expr if_then_else(Expr cond, Expr t, Expr f);
Expr inv_seq_len(Program& p);
Expr is_pos_k(Program& p, std::int64_t k);
Expr rha(Expr q, Expr k, Expr v);
Expr rightmost_best_match(Expr q, Expr k, Expr v);
Expr rightmost_exact_match(Expr q, Expr k, Expr v, Expr d);
Expr sum(Expr a);

// Next-token program for the PENCIL simulation of a machine. The vocabulary
// is the codec's update tokens followed by [SEP] and [RETURN].
Program build_tm_program(const TMSpec& spec);

// Teacher-forced comparison with TmTeacher along each run: same stopping rule
// as run_pencil_tm, every step with a non-empty context is checked.
struct TmCheck {
    std::size_t runs = 0;
    std::size_t tokens_checked = 0;
    std::size_t ambiguous = 0;
    std::size_t mismatches = 0;
    std::string first_failure;  // empty when everything matched
    bool ok() const { return mismatches == 0 && ambiguous == 0; }
};

TmCheck check_tm_program(const TMSpec& spec, const Program& program, const std::vector<std::vector<int>>& inputs,
                         std::size_t step_cap, bool check_types = true);

}  // namespace pencil::fasp
