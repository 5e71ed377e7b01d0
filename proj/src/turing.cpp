#include "pencil/turing.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "pencil/rng.hpp"

namespace pencil {

namespace {

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    std::istringstream in{std::string(text)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

int parse_move(const std::string& s) {
    if (s == "-1" || s == "L") return -1;
    if (s == "0" || s == "S") return 0;
    if (s == "+1" || s == "1" || s == "R") return 1;
    throw TmError("tm: bad move '" + s + "'");
}

const char* move_string(int d) { return d < 0 ? "-1" : d == 0 ? "0" : "+1"; }

int index_of(const std::vector<std::string>& names, std::string_view name, const char* what) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw TmError(std::string("tm: unknown ") + what + " '" + std::string(name) + "'");
    return static_cast<int>(it - names.begin());
}

void check_name(const std::string& n, const char* what) {
    if (n.empty()) throw TmError(std::string("tm: empty ") + what + " name");
    if (n.find_first_of(" \t\r\n/") != std::string::npos)
        throw TmError(std::string("tm: ") + what + " name '" + n + "' contains whitespace or '/'");
    const auto& sp = special_surfaces();
    if (std::find(sp.begin(), sp.end(), n) != sp.end())
        throw TmError(std::string("tm: ") + what + " name '" + n + "' is a special token");
}

}  // namespace

int TMSpec::symbol(std::string_view name) const { return index_of(alphabet, name, "symbol"); }
int TMSpec::state(std::string_view name) const { return index_of(states, name, "state"); }

void validate(const TMSpec& spec) {
    const int na = static_cast<int>(spec.alphabet.size());
    const int nq = static_cast<int>(spec.states.size());
    if (na < 2) throw TmError("tm: alphabet needs the blank and at least one other symbol");
    if (nq < 1) throw TmError("tm: no states");
    std::set<std::string> seen;
    for (const auto& a : spec.alphabet) {
        check_name(a, "symbol");
        if (!seen.insert(a).second) throw TmError("tm: duplicate symbol '" + a + "'");
    }
    seen.clear();
    for (const auto& q : spec.states) {
        check_name(q, "state");
        if (!seen.insert(q).second) throw TmError("tm: duplicate state '" + q + "'");
    }
    if (spec.blank < 0 || spec.blank >= na) throw TmError("tm: blank out of range");
    if (spec.start < 0 || spec.start >= nq) throw TmError("tm: start state out of range");
    for (int q : spec.accept)
        if (q < 0 || q >= nq) throw TmError("tm: accept state out of range");
    for (int q : spec.reject) {
        if (q < 0 || q >= nq) throw TmError("tm: reject state out of range");
        if (spec.accept.count(q)) throw TmError("tm: state '" + spec.states[q] + "' both accepts and rejects");
    }
    if (static_cast<int>(spec.delta.size()) != nq) throw TmError("tm: transition table is not total");
    for (int q = 0; q < nq; ++q) {
        if (static_cast<int>(spec.delta[q].size()) != na) throw TmError("tm: transition table is not total");
        for (int a = 0; a < na; ++a) {
            const Transition& t = spec.delta[q][a];
            const std::string where = " in row (" + spec.states[q] + ", " + spec.alphabet[a] + ")";
            if (t.next < 0 || t.next >= nq) throw TmError("tm: next state out of range" + where);
            if (t.write < 0 || t.write >= na) throw TmError("tm: written symbol out of range" + where);
            if (t.write == spec.blank) throw TmError("tm: transition writes the blank" + where);
            if (t.move < -1 || t.move > 1) throw TmError("tm: move out of range" + where);
        }
    }
}

TMSpec parse_tm(std::string_view text) {
    TMSpec spec;
    std::map<std::string, std::vector<std::string>> directives;
    std::vector<std::pair<int, std::vector<std::string>>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto colon = t.find(':');
        auto arrow = t.find("->");
        if (colon != std::string::npos && (arrow == std::string::npos || colon < arrow)) {
            std::string key = trim(t.substr(0, colon));
            if (key.find_first_of(" \t") == std::string::npos) {
                if (directives.count(key)) throw TmError("tm line " + std::to_string(lineno) + ": repeated '" + key + "'");
                directives[key] = split_ws(t.substr(colon + 1));
                continue;
            }
        }
        auto w = split_ws(t);
        if (w.size() != 6 || w[2] != "->")
            throw TmError("tm line " + std::to_string(lineno) + ": expected 'q a -> q' a' d'");
        rows.emplace_back(lineno, std::move(w));
    }
    auto need = [&](const std::string& key) -> const std::vector<std::string>& {
        auto it = directives.find(key);
        if (it == directives.end()) throw TmError("tm: missing '" + key + ":' line");
        return it->second;
    };
    for (const auto& [key, _] : directives)
        if (key != "alphabet" && key != "blank" && key != "states" && key != "start" && key != "accept" &&
            key != "reject")
            throw TmError("tm: unknown directive '" + key + "'");
    spec.alphabet = need("alphabet");
    spec.states = need("states");
    const auto& blank = need("blank");
    const auto& start = need("start");
    if (blank.size() != 1) throw TmError("tm: 'blank:' takes one symbol");
    if (start.size() != 1) throw TmError("tm: 'start:' takes one state");
    spec.blank = spec.symbol(blank[0]);
    spec.start = spec.state(start[0]);
    if (directives.count("accept"))
        for (const auto& q : directives["accept"]) spec.accept.insert(spec.state(q));
    if (directives.count("reject"))
        for (const auto& q : directives["reject"]) spec.reject.insert(spec.state(q));
    const std::size_t nq = spec.states.size(), na = spec.alphabet.size();
    std::vector<std::vector<std::optional<Transition>>> table(nq, std::vector<std::optional<Transition>>(na));
    for (const auto& [ln, w] : rows) {
        try {
            int q = spec.state(w[0]), a = spec.symbol(w[1]);
            if (table[q][a]) throw TmError("duplicate row");
            table[q][a] = Transition{spec.state(w[3]), spec.symbol(w[4]), parse_move(w[5])};
        } catch (const TmError& e) {
            throw TmError("tm line " + std::to_string(ln) + ": " + e.what());
        }
    }
    spec.delta.assign(nq, std::vector<Transition>(na));
    for (std::size_t q = 0; q < nq; ++q)
        for (std::size_t a = 0; a < na; ++a) {
            if (!table[q][a])
                throw TmError("tm: no transition for (" + spec.states[q] + ", " + spec.alphabet[a] + ")");
            spec.delta[q][a] = *table[q][a];
        }
    validate(spec);
    return spec;
}

TMSpec load_tm(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TmError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_tm(ss.str());
}

std::string format_tm(const TMSpec& spec) {
    std::ostringstream out;
    auto list = [&](const char* key, const auto& items) {
        out << key << ":";
        for (const auto& x : items) out << " " << x;
        out << "\n";
    };
    list("alphabet", spec.alphabet);
    out << "blank: " << spec.alphabet[spec.blank] << "\n";
    list("states", spec.states);
    out << "start: " << spec.states[spec.start] << "\n";
    std::vector<std::string> acc, rej;
    for (int q : spec.accept) acc.push_back(spec.states[q]);
    for (int q : spec.reject) rej.push_back(spec.states[q]);
    list("accept", acc);
    list("reject", rej);
    for (std::size_t q = 0; q < spec.states.size(); ++q)
        for (std::size_t a = 0; a < spec.alphabet.size(); ++a) {
            const Transition& t = spec.delta[q][a];
            out << spec.states[q] << " " << spec.alphabet[a] << " -> " << spec.states[t.next] << " "
                << spec.alphabet[t.write] << " " << move_string(t.move) << "\n";
        }
    return out.str();
}

int read(const TMSpec& spec, const Configuration& c) {
    auto it = c.tape.find(c.head);
    return it == c.tape.end() ? spec.blank : it->second;
}

Configuration initial_configuration(const TMSpec& spec, const std::vector<int>& input) {
    Configuration c;
    c.state = spec.start;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i] == spec.blank || input[i] < 0 || input[i] >= static_cast<int>(spec.alphabet.size()))
            throw TmError("tm: input symbol " + std::to_string(i) + " is blank or unknown");
        c.tape[static_cast<long>(i)] = input[i];
    }
    c.head = static_cast<long>(input.size());
    return c;
}

Configuration canonical(const Configuration& c) {
    long shift = c.tape.empty() ? c.head : c.tape.begin()->first;
    Configuration out;
    out.state = c.state;
    out.head = c.head - shift;
    for (const auto& [pos, a] : c.tape) out.tape[pos - shift] = a;
    return out;
}

bool translation_equal(const Configuration& a, const Configuration& b) { return canonical(a) == canonical(b); }

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Accept: return "accept";
        case Verdict::Reject: return "reject";
        case Verdict::Timeout: return "timeout";
    }
    return "";
}

std::vector<int> parse_input(const TMSpec& spec, std::string_view text) {
    std::vector<int> out;
    for (const auto& w : split_ws(text)) {
        int a = spec.symbol(w);
        if (a == spec.blank) throw TmError("tm: input contains the blank");
        out.push_back(a);
    }
    return out;
}

std::string format_input(const TMSpec& spec, const std::vector<int>& input) {
    std::string s;
    for (int a : input) {
        if (!s.empty()) s += ' ';
        s += spec.alphabet.at(static_cast<std::size_t>(a));
    }
    return s;
}

TmResult tm_run(const TMSpec& spec, const std::vector<int>& input, std::size_t step_cap) {
    if (step_cap < 1) throw TmError("tm_run: step cap must be at least 1");
    TmResult r;
    Configuration c = initial_configuration(spec, input);
    long lo = 0, hi = c.head;
    while (r.steps < step_cap) {
        const Transition& t = spec.delta[c.state][read(spec, c)];
        c.tape[c.head] = t.write;
        c.head += t.move;
        c.state = t.next;
        ++r.steps;
        lo = std::min(lo, c.head);
        hi = std::max(hi, c.head);
        if (spec.accept.count(c.state)) {
            r.verdict = Verdict::Accept;
            break;
        }
        if (spec.reject.count(c.state)) {
            r.verdict = Verdict::Reject;
            break;
        }
    }
    r.space = static_cast<std::size_t>(hi - lo + 1);
    r.final = std::move(c);
    return r;
}

Configuration apply_update(Configuration c, const UpdateToken& u) {
    c.tape[c.head] = u.a;
    c.head += u.d;
    c.state = u.q;
    return c;
}

Configuration apply_updates(Configuration c, const UpdateSeq& seq) {
    for (const auto& u : seq) {
        c.tape[c.head] = u.a;
        c.head += u.d;
        c.state = u.q;
    }
    return c;
}

Configuration blank_configuration(const TMSpec& spec) {
    Configuration c;
    c.state = spec.start;
    return c;
}

UpdateSeq encode_input(const TMSpec& spec, const std::vector<int>& input) {
    UpdateSeq out;
    for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i] == spec.blank || input[i] < 0 || input[i] >= static_cast<int>(spec.alphabet.size()))
            throw TmError("encode_input: symbol " + std::to_string(i) + " is blank or unknown");
        out.push_back({spec.start, input[i], 1});
    }
    return out;
}

UpdateToken step_token(const TMSpec& spec, const Configuration& c) {
    const Transition& t = spec.delta[c.state][read(spec, c)];
    return {t.next, t.write, t.move};
}

UpdateToken am_next(const TMSpec& spec, const UpdateSeq& seq) {
    return step_token(spec, apply_updates(blank_configuration(spec), seq));
}

UpdateSeq embed(const TMSpec& spec, const Configuration& c) {
    if (c.tape.empty()) {
        if (c.head != 0) throw TmError("embed: blank tape with the head away from 0");
        return {};
    }
    const long mn = c.tape.begin()->first, mx = c.tape.rbegin()->first, p = c.head;
    if (p < mn - 1 || p > mx + 1) throw TmError("embed: head is more than one cell outside the written region");
    if (static_cast<long>(c.tape.size()) != mx - mn + 1) throw TmError("embed: written region has a gap");
    const long n = mx - mn + std::max(mx - p - 1, 0L) + 1;
    UpdateSeq out;
    out.reserve(static_cast<std::size_t>(n));
    long pos = mn;
    for (long i = 1; i <= n; ++i) {
        int d;
        if (i <= mx - mn) d = 1;
        else if (i == mx - mn + 1) d = p == mx + 1 ? 1 : p == mx ? 0 : -1;
        else d = -1;
        out.push_back({c.state, c.tape.at(pos), d});
        pos += d;
    }
    (void)spec;
    return out;
}

UpdateSeq state_fn(const TMSpec& spec, const UpdateSeq& seq) {
    return embed(spec, apply_updates(blank_configuration(spec), seq));
}

TmCodec::TmCodec(const TMSpec& spec) : spec_(&spec) {
    for (int q = 0; q < static_cast<int>(spec.states.size()); ++q)
        for (int a = 0; a < static_cast<int>(spec.alphabet.size()); ++a) {
            if (a == spec.blank) continue;
            for (int d = -1; d <= 1; ++d) {
                UpdateToken u{q, a, d};
                Token t = Token::base(spec.states[q] + "/" + spec.alphabet[a] + "/" + move_string(d));
                lookup_[t] = all_.size();
                all_.push_back(u);
                tokens_.push_back(t);
            }
        }
}

std::size_t TmCodec::index(const UpdateToken& u) const {
    const int na = static_cast<int>(spec_->alphabet.size()) - 1;
    const int a = u.a > spec_->blank ? u.a - 1 : u.a;
    return static_cast<std::size_t>((u.q * na + a) * 3 + (u.d + 1));
}

Token TmCodec::encode(const UpdateToken& u) const { return tokens_.at(index(u)); }

std::optional<UpdateToken> TmCodec::decode(Token t) const {
    auto it = lookup_.find(t);
    if (it == lookup_.end()) return std::nullopt;
    return all_[it->second];
}

TokenSeq TmCodec::encode(const UpdateSeq& seq) const {
    TokenSeq out;
    out.reserve(seq.size());
    for (const auto& u : seq) out.push_back(encode(u));
    return out;
}

UpdateSeq TmCodec::decode_all(const TokenSeq& seq) const {
    UpdateSeq out;
    out.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        auto u = decode(seq[i]);
        if (!u) throw TmError("tm: token " + std::to_string(i) + " '" + seq[i].surface() + "' is not an update");
        out.push_back(*u);
    }
    return out;
}

Token TmTeacher::operator()(const TokenSeq& context) const {
    auto sep = std::find(context.rbegin(), context.rend(), kSep);
    if (sep != context.rend()) {
        const std::size_t j = static_cast<std::size_t>(context.rend() - sep) - 1;
        auto target = state_fn(spec_, codec_.decode_all(TokenSeq(context.begin(), context.begin() + j)));
        const std::size_t written = context.size() - j - 1;
        return written < target.size() ? codec_.encode(target[written]) : kReturn;
    }
    auto seq = codec_.decode_all(context);
    auto c = apply_updates(blank_configuration(spec_), seq);
    if (!context.empty() && context.size() >= 2 * embed(spec_, c).size()) return kSep;
    return codec_.encode(step_token(spec_, c));
}

PencilTmResult run_pencil_tm(const TMSpec& spec, const std::vector<int>& input, std::size_t step_cap) {
    if (step_cap < 1) throw TmError("run_pencil_tm: step cap must be at least 1");
    TmTeacher teacher(spec);
    const TmCodec& codec = teacher.codec();
    PencilTmResult r;
    r.prompt = codec.encode(encode_input(spec, input));
    TokenSeq ctx = r.prompt;
    r.max_context = ctx.size();
    r.state_space = state_fn(spec, encode_input(spec, input)).size();
    bool summarizing = false;
    while (true) {
        Token t = teacher(ctx);
        ctx.push_back(t);
        ++r.total_tokens;
        r.max_context = std::max(r.max_context, ctx.size());
        if (t == kSep) {
            summarizing = true;
        } else if (t == kReturn) {
            ctx = reduce_simplified(ctx);
            ++r.reductions;
            summarizing = false;
        } else if (!summarizing) {
            ++r.steps;
            UpdateToken u = *codec.decode(t);
            r.state_space = std::max(r.state_space, state_fn(spec, codec.decode_all(ctx)).size());
            if (spec.accept.count(u.q)) {
                r.verdict = Verdict::Accept;
                break;
            }
            if (spec.reject.count(u.q)) {
                r.verdict = Verdict::Reject;
                break;
            }
            if (r.steps >= step_cap) break;
        }
    }
    r.final_context = std::move(ctx);
    return r;
}

TMSpec random_tm(std::uint64_t seed, const RandomTmConfig& cfg) {
    if (cfg.state_counts.empty() || cfg.alphabet_sizes.empty()) throw TmError("random_tm: empty size choices");
    Rng rng(seed);
    const int nq = cfg.state_counts[rng.below(cfg.state_counts.size())];
    const int na = cfg.alphabet_sizes[rng.below(cfg.alphabet_sizes.size())];
    if (nq < 1 || na < 2 || na > 10) throw TmError("random_tm: unsupported sizes");
    TMSpec spec;
    spec.alphabet.push_back("b");
    for (int a = 1; a < na; ++a) spec.alphabet.push_back(std::to_string(a - 1));
    for (int q = 0; q < nq; ++q) spec.states.push_back("q" + std::to_string(q));
    spec.blank = 0;
    spec.start = 0;
    spec.delta.assign(static_cast<std::size_t>(nq), std::vector<Transition>(static_cast<std::size_t>(na)));
    for (auto& row : spec.delta)
        for (auto& t : row) {
            t.next = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
            t.write = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(na - 1)));
            t.move = static_cast<int>(rng.below(3)) - 1;
        }
    int acc = -1;
    if (rng.coin()) {
        acc = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq)));
        spec.accept.insert(acc);
    }
    if (rng.coin() && nq > (acc >= 0 ? 1 : 0)) {
        int rej = static_cast<int>(rng.below(static_cast<std::uint64_t>(nq - (acc >= 0 ? 1 : 0))));
        if (acc >= 0 && rej >= acc) ++rej;
        spec.reject.insert(rej);
    }
    validate(spec);
    return spec;
}

std::vector<int> random_input(const TMSpec& spec, std::uint64_t seed, std::size_t max_len) {
    Rng rng(seed);
    std::vector<int> symbols;
    for (int a = 0; a < static_cast<int>(spec.alphabet.size()); ++a)
        if (a != spec.blank) symbols.push_back(a);
    std::vector<int> out(rng.below(max_len + 1));
    for (int& a : out) a = symbols[rng.below(symbols.size())];
    return out;
}

TMSpec binary_counter_tm() {
    return parse_tm(R"(# counts the binary number on the tape up to overflow
alphabet: b 0 1 E
blank: b
states: start inc ret acc rej
start: start
accept: acc
reject: rej
start b -> inc E -1
start 0 -> rej E 0
start 1 -> rej E 0
start E -> rej E 0
inc b -> acc E 0
inc 0 -> ret 1 +1
inc 1 -> inc 0 -1
inc E -> rej E 0
ret b -> rej E 0
ret 0 -> ret 0 +1
ret 1 -> ret 1 +1
ret E -> inc E -1
acc b -> acc E 0
acc 0 -> acc 0 0
acc 1 -> acc 1 0
acc E -> acc E 0
rej b -> rej E 0
rej 0 -> rej 0 0
rej 1 -> rej 1 0
rej E -> rej E 0
)");
}

TMSpec unary_increment_tm() {
    return parse_tm(R"(alphabet: b 1
blank: b
states: q0 acc
start: q0
accept: acc
reject:
q0 b -> acc 1 +1
q0 1 -> q0 1 +1
acc b -> acc 1 0
acc 1 -> acc 1 0
)");
}

}  // namespace pencil
