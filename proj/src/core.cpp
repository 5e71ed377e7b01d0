#include "pencil/core.hpp"

#include <deque>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace pencil {

namespace {

class Interner {
public:
    Interner() {
        for (const auto& s : special_surfaces()) intern_locked(s);
    }

    std::uint32_t intern(std::string_view s) {
        {
            std::shared_lock lock(mu_);
            auto it = index_.find(std::string(s));
            if (it != index_.end()) return it->second;
        }
        std::unique_lock lock(mu_);
        return intern_locked(std::string(s));
    }

    const std::string& surface(std::uint32_t id) {
        std::shared_lock lock(mu_);
        return strings_.at(id);
    }

private:
    std::uint32_t intern_locked(const std::string& s) {
        auto it = index_.find(s);
        if (it != index_.end()) return it->second;
        auto id = static_cast<std::uint32_t>(strings_.size());
        strings_.push_back(s);
        index_.emplace(s, id);
        return id;
    }

    std::shared_mutex mu_;
    std::deque<std::string> strings_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

Interner& interner() {
    static Interner instance;
    return instance;
}

bool is_space(char c) { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

template <typename F>
void for_each_word(std::string_view text, F&& f) {
    std::size_t i = 0, n = text.size(), pos = 0;
    while (i < n) {
        while (i < n && is_space(text[i])) ++i;
        if (i == n) break;
        std::size_t j = i;
        while (j < n && !is_space(text[j])) ++j;
        f(text.substr(i, j - i), pos++);
        i = j;
    }
}

}  // namespace

const std::vector<std::string>& special_surfaces() {
    static const std::vector<std::string> s = {
        "[CALL]", "[SEP]", "[RETURN]", "<|startoftext|>", "<|endofprompt|>", "<|endoftext|>", "<|pad|>",
    };
    return s;
}

Token Token::base(std::string_view symbol) {
    auto id = interner().intern(symbol);
    if (id < kSpecialCount)
        throw TokenError("base symbol '" + std::string(symbol) + "' collides with a special token");
    return Token(id);
}

Token Token::parse(std::string_view word) { return Token(interner().intern(word)); }

const std::string& Token::surface() const { return interner().surface(id_); }

TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    for_each_word(text, [&](std::string_view w, std::size_t) { out.push_back(Token::parse(w)); });
    return out;
}

std::string to_string(const TokenSeq& seq, std::size_t begin, std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) out.push_back(' ');
        out += seq[i].surface();
    }
    return out;
}

std::string to_string(const TokenSeq& seq) { return to_string(seq, 0, seq.size()); }

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    for_each_word(text, [&](std::string_view w, std::size_t pos) {
        if (pos) out.push_back(' ');
        out.append(w);
    });
    return out;
}

TokenWriter& TokenWriter::words(std::string_view text) {
    for_each_word(text, [&](std::string_view w, std::size_t) { out_.push_back(Token::parse(w)); });
    return *this;
}

void Vocab::add(const std::string& surface) {
    if (index_.count(surface)) return;
    index_.emplace(surface, static_cast<std::uint32_t>(entries_.size()));
    entries_.push_back(surface);
}

Vocab Vocab::build(const std::vector<TokenSeq>& corpus) {
    if (corpus.empty()) throw TokenError("build_vocab: empty corpus");
    Vocab v;
    for (const auto& s : special_surfaces()) v.add(s);
    for (const auto& seq : corpus)
        for (Token t : seq) v.add(t.surface());
    return v;
}

Vocab Vocab::from_entries(std::vector<std::string> entries) {
    const auto& specials = special_surfaces();
    if (entries.size() < specials.size())
        throw TokenError("vocab: fewer entries than special tokens");
    Vocab v;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i < specials.size() && entries[i] != specials[i])
            throw TokenError("vocab: line " + std::to_string(i) + " must be " + specials[i] + ", got " + entries[i]);
        if (entries[i].empty() || normalize_whitespace(entries[i]) != entries[i])
            throw TokenError("vocab: line " + std::to_string(i) + " is not a single word");
        if (v.index_.count(entries[i]))
            throw TokenError("vocab: duplicate entry '" + entries[i] + "' at line " + std::to_string(i));
        v.add(entries[i]);
    }
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TokenError("vocab: cannot open " + path);
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) entries.push_back(line);
    try {
        return from_entries(std::move(entries));
    } catch (const TokenError& e) {
        throw TokenError(path + ": " + e.what());
    }
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TokenError("vocab: cannot write " + path);
    for (const auto& e : entries_) out << e << '\n';
    if (!out) throw TokenError("vocab: write failed for " + path);
}

bool Vocab::contains(std::string_view surface) const { return index_.count(std::string(surface)) != 0; }

std::uint32_t Vocab::id_of(std::string_view surface) const {
    auto it = index_.find(std::string(surface));
    if (it == index_.end()) throw TokenError("vocab: unknown token '" + std::string(surface) + "'");
    return it->second;
}

Token Vocab::token(std::uint32_t id) const { return Token::parse(entries_.at(id)); }

TokenSeq Vocab::encode(std::string_view text) const {
    TokenSeq out;
    for_each_word(text, [&](std::string_view w, std::size_t pos) {
        if (!contains(w))
            throw TokenError("encode: unknown word '" + std::string(w) + "' at position " + std::to_string(pos));
        out.push_back(Token::parse(w));
    });
    return out;
}

std::string Vocab::decode(const TokenSeq& seq) const {
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (!contains(seq[i].surface()))
            throw TokenError("decode: token '" + seq[i].surface() + "' at position " + std::to_string(i) +
                             " is not in the vocabulary");
    return to_string(seq);
}

std::vector<std::uint32_t> Vocab::ids(const TokenSeq& seq) const {
    std::vector<std::uint32_t> out;
    out.reserve(seq.size());
    for (Token t : seq) out.push_back(id_of(t));
    return out;
}

TokenSeq Vocab::tokens(const std::vector<std::uint32_t>& ids) const {
    TokenSeq out;
    out.reserve(ids.size());
    for (auto id : ids) {
        if (id >= entries_.size()) throw TokenError("vocab: id " + std::to_string(id) + " out of range");
        out.push_back(token(id));
    }
    return out;
}

}  // namespace pencil
