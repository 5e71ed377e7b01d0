#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pencil {

enum class TokenKind : std::uint8_t {
    Call,
    Sep,
    Return,
    StartOfText,
    EndOfPrompt,
    EndOfText,
    Pad,
    Base,
};

inline constexpr std::size_t kSpecialCount = 7;

// Interned token. Ids below kSpecialCount are the special tokens in the
// order of TokenKind; everything else is a Base symbol.
class Token {
public:
    constexpr Token() = default;
    static constexpr Token special(TokenKind k) { return Token(static_cast<std::uint32_t>(k)); }
    // Throws TokenError when the symbol is a special surface form.
    static Token base(std::string_view symbol);
    // Maps special surfaces to their kinds and interns anything else.
    static Token parse(std::string_view word);
    static constexpr Token from_id(std::uint32_t id) { return Token(id); }

    constexpr std::uint32_t id() const { return id_; }
    constexpr TokenKind kind() const {
        return id_ < kSpecialCount ? static_cast<TokenKind>(id_) : TokenKind::Base;
    }
    constexpr bool is(TokenKind k) const { return kind() == k; }
    constexpr bool is_special() const { return id_ < kSpecialCount; }
    const std::string& surface() const;

    friend constexpr bool operator==(Token a, Token b) { return a.id_ == b.id_; }
    friend constexpr auto operator<=>(Token a, Token b) { return a.id_ <=> b.id_; }

private:
    constexpr explicit Token(std::uint32_t id) : id_(id) {}
    std::uint32_t id_ = 0;
};

inline constexpr Token kCall = Token::special(TokenKind::Call);
inline constexpr Token kSep = Token::special(TokenKind::Sep);
inline constexpr Token kReturn = Token::special(TokenKind::Return);
inline constexpr Token kStartOfText = Token::special(TokenKind::StartOfText);
inline constexpr Token kEndOfPrompt = Token::special(TokenKind::EndOfPrompt);
inline constexpr Token kEndOfText = Token::special(TokenKind::EndOfText);
inline constexpr Token kPad = Token::special(TokenKind::Pad);

using TokenSeq = std::vector<Token>;

// Surface forms of the specials, indexed by TokenKind.
const std::vector<std::string>& special_surfaces();

class TokenError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Splits on whitespace and interns every word; special surfaces map to the
// special kinds.
TokenSeq tokenize(std::string_view text);
std::string to_string(const TokenSeq& seq);
std::string to_string(const TokenSeq& seq, std::size_t begin, std::size_t end);
std::string normalize_whitespace(std::string_view text);

// Appends words to a sequence; handy for trace emitters.
class TokenWriter {
public:
    explicit TokenWriter(TokenSeq& out) : out_(out) {}
    TokenWriter& operator<<(Token t) { out_.push_back(t); return *this; }
    TokenWriter& operator<<(std::string_view word) { out_.push_back(Token::base(word)); return *this; }
    TokenWriter& operator<<(int v) { return *this << std::string_view(std::to_string(v)); }
    TokenWriter& words(std::string_view text);
    TokenWriter& append(const TokenSeq& seq) { out_.insert(out_.end(), seq.begin(), seq.end()); return *this; }
private:
    TokenSeq& out_;
};

class Vocab {
public:
    // Specials first in TokenKind order, then surfaces in first-seen order.
    static Vocab build(const std::vector<TokenSeq>& corpus);
    static Vocab load(const std::string& path);
    static Vocab from_entries(std::vector<std::string> entries);

    void save(const std::string& path) const;

    std::size_t size() const { return entries_.size(); }
    const std::vector<std::string>& entries() const { return entries_; }
    const std::string& surface(std::uint32_t id) const { return entries_.at(id); }
    bool contains(std::string_view surface) const;
    std::uint32_t id_of(std::string_view surface) const;
    std::uint32_t id_of(Token t) const { return id_of(t.surface()); }
    Token token(std::uint32_t id) const;

    TokenSeq encode(std::string_view text) const;
    std::string decode(const TokenSeq& seq) const;
    std::vector<std::uint32_t> ids(const TokenSeq& seq) const;
    TokenSeq tokens(const std::vector<std::uint32_t>& ids) const;

    friend bool operator==(const Vocab& a, const Vocab& b) { return a.entries_ == b.entries_; }

private:
    void add(const std::string& surface);
    std::vector<std::string> entries_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace pencil

template <>
struct std::hash<pencil::Token> {
    std::size_t operator()(pencil::Token t) const noexcept { return t.id(); }
};
