#include "pencil/puzzle.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <numeric>

#include "pencil/rng.hpp"

namespace pencil {

namespace {

const std::vector<std::string> kCategoryNames = {"Color", "Nationality", "Pet", "Drink", "Smoke"};
const std::vector<std::vector<std::string>> kPools = {
    {"Blue", "Green", "Red", "White", "Yellow"},
    {"Brit", "German", "Swede", "Dane", "Norwegian"},
    {"Birds", "Dogs", "Fish", "Cats", "Horses"},
    {"Coffee", "Milk", "Tea", "Beer", "Water"},
    {"Blends", "Dunhill", "Prince", "BlueMaster", "PallMall"},
};
constexpr int kNationality = 1;
constexpr int kPet = 2;

const char* relation_word(Relation r) {
    switch (r) {
        case Relation::Right: return "RIGHT";
        case Relation::Left: return "LEFT";
        case Relation::Same: return "SAME";
    }
    return "";
}

const char* relation_phrase(Relation r) {
    switch (r) {
        case Relation::Right: return "is immediately to the right of";
        case Relation::Left: return "is immediately to the left of";
        case Relation::Same: return "is the same house as";
    }
    return "";
}

// house of x minus house of y
int required_offset(Relation r) { return r == Relation::Right ? 1 : r == Relation::Left ? -1 : 0; }

using Mask = std::uint32_t;
using Grid = std::vector<std::vector<Mask>>;  // [house][cat]

class Solver {
public:
    Solver(const PuzzleInstance& p, TokenSeq& out) : p_(p), h_(p.houses), w_(out) {
        for (int c = 0; c < p.categories; ++c) values_.push_back(category_values(c, h_));
    }

    std::optional<Grid> fresh(Grid g, std::vector<int> live) {
        w_ << kCall << "======" << "Possible" << "Assignments" << "======";
        write_block(g, &live);
        return body(std::move(g), std::move(live), false);
    }

    void write_block(const Grid& g, const std::vector<int>* live) {
        for (int h = 0; h < h_; ++h) {
            w_ << house(h);
            for (int c = 0; c < p_.categories; ++c) {
                Mask m = g[h][c];
                w_ << category_name(c) << "category";
                if (std::popcount(m) == 1) {
                    w_ << "is" << values_[c][std::countr_zero(m)];
                } else {
                    w_ << "have";
                    write_domain(c, m);
                }
            }
        }
        if (live) {
            w_ << "Unsatisfied" << "constraints" << "are";
            for (int k : *live) w_ << constraint_name(k);
        }
    }

    const std::string& value_name(const Attr& a) const { return values_[a.cat][a.value]; }

private:
    static std::string house(int h) { return "House#" + std::to_string(h + 1); }
    static std::string constraint_name(int k) { return "Constraint#" + std::to_string(k + 1); }

    void write_domain(int cat, Mask m) {
        w_ << std::popcount(m) << "possibilities";
        if (m == 0) w_ << "empty";
        for (Mask r = m; r; r &= r - 1) w_ << values_[cat][std::countr_zero(r)];
    }

    std::optional<Grid> body(Grid g, std::vector<int> live, bool after_propagation) {
        if (all_singleton(g) && live.empty() && distinct(g)) {
            w_ << "=>" << "Puzzle" << "is" << "solved" << kSep << "Solution";
            write_block(g, nullptr);
            w_ << kReturn;
            return g;
        }
        w_ << "=>" << "Puzzle" << "not" << "solved" << "yet";
        if (all_singleton(g) && (live.empty() || !distinct(g))) return fail();
        if (!after_propagation || all_singleton(g)) {
            w_ << "======" << "Propagation" << "======";
            std::vector<int> remaining;
            for (int k : live) {
                const Constraint& c = p_.constraints[static_cast<std::size_t>(k)];
                w_ << "Applying" << constraint_name(k) << kCall;
                Grid before = g;
                apply(g, c);
                w_ << kSep;
                write_diff(before, g);
                w_ << kReturn;
                if (any_empty(g)) return fail();
                if (satisfied(g, c)) {
                    w_ << "Remove" << constraint_name(k) << "because" << "it" << "is" << "satisfied";
                } else {
                    remaining.push_back(k);
                }
            }
            w_ << kSep << kCall << "======" << "Possible" << "Assignments" << "After" << "Propagation" << "======";
            write_block(g, &remaining);
            w_ << kReturn;
            return body(std::move(g), std::move(remaining), true);
        }
        return branch(std::move(g), std::move(live));
    }

    std::optional<Grid> branch(Grid g, std::vector<int> live) {
        int bh = -1, bc = -1;
        for (int h = 0; h < h_ && bh < 0; ++h)
            for (int c = 0; c < p_.categories; ++c)
                if (std::popcount(g[h][c]) > 1) {
                    bh = h;
                    bc = c;
                    break;
                }
        w_ << "======" << "Branch" << "======" << "Branching" << "on" << house(bh) << category_name(bc) << "category"
           << "with";
        write_domain(bc, g[bh][bc]);
        for (Mask r = g[bh][bc]; r; r &= r - 1) {
            int v = std::countr_zero(r);
            if (pinned(g, bc, v, bh) >= 0) continue;
            w_ << "Trying" << "possibility" << values_[bc][v] << "in" << house(bh) << category_name(bc) << "category";
            Grid child = g;
            child[bh][bc] = Mask(1) << v;
            if (auto sol = fresh(std::move(child), live)) {
                w_ << kSep << "Solution";
                write_block(*sol, nullptr);
                w_ << kReturn;
                return sol;
            }
        }
        return fail();
    }

    std::optional<Grid> fail() {
        w_ << kSep << "No" << "Solution" << kReturn;
        return std::nullopt;
    }

    // First house other than skip whose domain is exactly {v}; -1 if none.
    int pinned(const Grid& g, int cat, int v, int skip = -1) const {
        for (int h = 0; h < h_; ++h)
            if (h != skip && g[h][cat] == (Mask(1) << v)) return h;
        return -1;
    }
    int pinned(const Grid& g, const Attr& a) const { return pinned(g, a.cat, a.value); }

    static bool has(const Grid& g, int h, const Attr& a) { return (g[h][a.cat] >> a.value) & 1; }
    static void remove(Grid& g, int h, const Attr& a) { g[h][a.cat] &= ~(Mask(1) << a.value); }
    static bool single(const Grid& g, int h, int cat) { return std::popcount(g[h][cat]) == 1; }

    bool all_singleton(const Grid& g) const {
        for (const auto& row : g)
            for (Mask m : row)
                if (std::popcount(m) != 1) return false;
        return true;
    }
    bool any_empty(const Grid& g) const {
        for (const auto& row : g)
            for (Mask m : row)
                if (m == 0) return true;
        return false;
    }
    bool distinct(const Grid& g) const {
        for (int c = 0; c < p_.categories; ++c) {
            Mask seen = 0;
            for (int h = 0; h < h_; ++h) seen |= g[h][c];
            if (std::popcount(seen) != h_) return false;
        }
        return true;
    }
    bool satisfied(const Grid& g, const Constraint& c) const {
        int hx = pinned(g, c.x), hy = pinned(g, c.y);
        return hx >= 0 && hy >= 0 && hx - hy == required_offset(c.rel);
    }

    void write_diff(const Grid& a, const Grid& b) {
        bool any = false;
        for (int c = 0; c < p_.categories; ++c)
            for (int h = 0; h < h_; ++h) {
                if (a[h][c] == b[h][c]) continue;
                any = true;
                w_ << house(h) << category_name(c) << "category" << "changed" << "from";
                write_domain(c, a[h][c]);
                w_ << "to";
                write_domain(c, b[h][c]);
            }
        if (!any) w_ << "No" << "changes" << "from" << "this" << "constraint";
    }

    void apply(Grid& g, const Constraint& c) {
        const std::string& xs = value_name(c.x);
        const std::string& ys = value_name(c.y);
        w_ << "PHASE" << "1:" << "Single-value" << "logic" << "for" << xs << "and" << ys << "under"
           << relation_word(c.rel) << "constraint";
        single_value(g, c.x.cat);
        if (c.y.cat != c.x.cat) single_value(g, c.y.cat);
        w_ << "PHASE" << "2:" << "Handling" << "relation" << xs << relation_word(c.rel) << ys;
        if (c.rel == Relation::Same) same(g, c.x, c.y);
        else adjacent(g, c.x, c.y, c.rel == Relation::Right);
    }

    void single_value(Grid& g, int cat) {
        const std::string& cn = category_name(cat);
        for (int p = 0; p < h_; ++p) {
            if (!single(g, p, cat)) continue;
            Attr a{cat, std::countr_zero(g[p][cat])};
            for (int h = 0; h < h_; ++h) {
                if (h == p || !has(g, h, a)) continue;
                remove(g, h, a);
                const std::string& v = value_name(a);
                w_ << "Removing" << v << "from" << house(h) << cn << "category" << "because" << v << "is"
                   << "pinned" << "in" << "another" << "house";
            }
        }
        for (int v = 0; v < h_; ++v) {
            Attr a{cat, v};
            int only = -1, count = 0;
            for (int h = 0; h < h_; ++h)
                if (has(g, h, a)) {
                    only = h;
                    ++count;
                }
            if (count != 1 || single(g, only, cat)) continue;
            g[only][cat] = Mask(1) << v;
            w_ << "Forcing" << value_name(a) << "in" << house(only) << cn << "category" << "because" << "it"
               << "can" << "only" << "appear" << "here";
        }
    }

    void place(Grid& g, int h, const Attr& a) { g[h][a.cat] = Mask(1) << a.value; }

    // right: x sits immediately right of y; otherwise immediately left.
    void adjacent(Grid& g, const Attr& x, const Attr& y, bool right) {
        const std::string& xs = value_name(x);
        const std::string& ys = value_name(y);
        const char* side = right ? "RIGHT" : "LEFT";
        const char* other = right ? "LEFT" : "RIGHT";
        const int d = right ? 1 : -1;  // house(x) - house(y)
        w_ << xs << "is" << "immediately" << side << "of" << ys;
        if (int py = pinned(g, y); py >= 0) {
            for (int h = 0; h < h_; ++h) {
                if (h == py + d || !has(g, h, x)) continue;
                remove(g, h, x);
                w_ << "Since" << ys << "is" << "pinned" << "to" << house(py) << "," << "removing" << xs << "from"
                   << house(h) << "because" << xs << "must" << "be" << (right ? "right" : "left") << "of" << house(py);
            }
            int t = py + d;
            if (t >= 0 && t < h_ && has(g, t, x) && !single(g, t, x.cat)) {
                place(g, t, x);
                w_ << "Placing" << xs << "in" << house(t) << "because" << ys << "is" << "pinned" << "to" << house(py);
            }
        } else if (int px = pinned(g, x); px >= 0) {
            for (int h = 0; h < h_; ++h) {
                if (h == px - d || !has(g, h, y)) continue;
                remove(g, h, y);
                w_ << ys << "must" << "be" << "exactly" << "one" << "house" << "to" << "the" << other << ","
                   << "removing" << "from" << house(h);
            }
            int t = px - d;
            if (t >= 0 && t < h_ && has(g, t, y) && !single(g, t, y.cat)) {
                place(g, t, y);
                w_ << "Placing" << ys << "in" << house(t) << "because" << xs << "is" << "pinned" << "to" << house(px);
            }
        } else if (right) {
            if (has(g, 0, x)) {
                remove(g, 0, x);
                w_ << "Removing" << xs << "from" << house(0) << "because" << xs << "can't" << "be" << "in" << "the"
                   << "leftmost" << "house" << "if" << "it's" << "to" << "the" << "RIGHT" << "of" << ys;
            }
            if (has(g, h_ - 1, y)) {
                remove(g, h_ - 1, y);
                w_ << "Removing" << ys << "from" << house(h_ - 1) << "can't" << "be" << "in" << "the" << "rightmost"
                   << "house" << "if" << "it's" << "to" << "the" << "LEFT" << "of" << xs;
            }
        } else {
            if (has(g, h_ - 1, x)) {
                remove(g, h_ - 1, x);
                w_ << "Removing" << xs << "from" << house(h_ - 1) << "because" << xs << "can't" << "be" << "in"
                   << "the" << "rightmost" << "house" << "if" << "it's" << "to" << "the" << "LEFT" << "of" << ys;
            }
            if (has(g, 0, y)) {
                remove(g, 0, y);
                w_ << "Removing" << ys << "from" << house(0) << "because" << ys << "can't" << "be" << "in" << "the"
                   << "leftmost" << "house" << "if" << "it's" << "to" << "the" << "RIGHT" << "of" << xs;
            }
        }
    }

    void same(Grid& g, const Attr& x, const Attr& y) {
        const std::string& xs = value_name(x);
        const std::string& ys = value_name(y);
        w_ << xs << "must" << "be" << "in" << "the" << "SAME" << "house" << "as" << ys;
        auto pinned_side = [&](const Attr& a, const std::string& as, const std::string& bs, int p) {
            if (has(g, p, a) && !single(g, p, a.cat)) {
                place(g, p, a);
                w_ << "Placing" << as << "in" << house(p) << "since" << bs << "is" << "in" << "this" << "house";
            }
            for (int h = 0; h < h_; ++h) {
                if (h == p || !has(g, h, a)) continue;
                remove(g, h, a);
                w_ << "Since" << bs << "is" << "pinned" << "to" << house(p) << "," << "removing" << as << "from"
                   << house(h);
            }
        };
        if (int py = pinned(g, y); py >= 0) pinned_side(x, xs, ys, py);
        else if (int px = pinned(g, x); px >= 0) pinned_side(y, ys, xs, px);
        for (int h = 0; h < h_; ++h) {
            if (!has(g, h, x) && has(g, h, y)) {
                remove(g, h, y);
                w_ << house(h) << "can't" << "hold" << xs << "since" << "it" << "can't" << "hold" << ys;
            } else if (has(g, h, x) && !has(g, h, y)) {
                remove(g, h, x);
                w_ << house(h) << "can't" << "hold" << ys << "since" << "it" << "can't" << "hold" << xs;
            }
        }
    }

    const PuzzleInstance& p_;
    int h_;
    TokenWriter w_;
    std::vector<std::vector<std::string>> values_;
};

bool holds(const Constraint& c, const PuzzleSolution& s, int cats_done) {
    if (c.x.cat >= cats_done || c.y.cat >= cats_done) return true;
    int hx = -1, hy = -1;
    for (std::size_t h = 0; h < s.size(); ++h) {
        if (s[h][c.x.cat] == c.x.value) hx = static_cast<int>(h);
        if (s[h][c.y.cat] == c.y.value) hy = static_cast<int>(h);
    }
    return hx >= 0 && hy >= 0 && hx - hy == required_offset(c.rel);
}

void enumerate(const PuzzleInstance& p, PuzzleSolution& s, int cat, std::vector<PuzzleSolution>& out,
               std::size_t limit) {
    if (out.size() >= limit) return;
    if (cat == p.categories) {
        out.push_back(s);
        return;
    }
    std::vector<int> perm(static_cast<std::size_t>(p.houses));
    std::iota(perm.begin(), perm.end(), 0);
    do {
        for (int h = 0; h < p.houses; ++h) s[h][cat] = perm[static_cast<std::size_t>(h)];
        bool ok = std::all_of(p.constraints.begin(), p.constraints.end(), [&](const Constraint& c) {
            return (c.x.cat != cat && c.y.cat != cat) || holds(c, s, cat + 1);
        });
        if (ok) enumerate(p, s, cat + 1, out, limit);
        if (out.size() >= limit) return;
    } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace

const std::string& category_name(int cat) { return kCategoryNames.at(static_cast<std::size_t>(cat)); }

std::vector<std::string> category_values(int cat, int houses) {
    const auto& pool = kPools.at(static_cast<std::size_t>(cat));
    if (houses < 1 || houses > static_cast<int>(pool.size())) throw TaskError("puzzle: unsupported house count");
    std::vector<std::string> v(pool.begin(), pool.begin() + houses);
    std::sort(v.begin(), v.end());
    return v;
}

void validate(const PuzzleInstance& p) {
    if (p.houses < 3 || p.houses > kMaxHouses)
        throw TaskError("puzzle: houses must be in 3.." + std::to_string(kMaxHouses));
    if (p.categories < 3 || p.categories > kMaxCategories)
        throw TaskError("puzzle: categories must be in 3.." + std::to_string(kMaxCategories));
    for (std::size_t k = 0; k < p.constraints.size(); ++k)
        for (const Attr& a : {p.constraints[k].x, p.constraints[k].y})
            if (a.cat < 0 || a.cat >= p.categories || a.value < 0 || a.value >= p.houses)
                throw TaskError("puzzle: constraint " + std::to_string(k + 1) + " names an unknown value");
}

bool satisfies(const PuzzleInstance& p, const PuzzleSolution& s) {
    if (static_cast<int>(s.size()) != p.houses) return false;
    for (int c = 0; c < p.categories; ++c) {
        std::vector<bool> seen(static_cast<std::size_t>(p.houses));
        for (const auto& row : s) {
            if (static_cast<int>(row.size()) != p.categories) return false;
            int v = row[c];
            if (v < 0 || v >= p.houses || seen[v]) return false;
            seen[v] = true;
        }
    }
    return std::all_of(p.constraints.begin(), p.constraints.end(),
                       [&](const Constraint& c) { return holds(c, s, p.categories); });
}

std::vector<PuzzleSolution> brute_force_puzzle(const PuzzleInstance& p, std::size_t limit) {
    validate(p);
    std::vector<PuzzleSolution> out;
    PuzzleSolution s(static_cast<std::size_t>(p.houses), std::vector<int>(static_cast<std::size_t>(p.categories)));
    enumerate(p, s, 0, out, limit);
    return out;
}

PuzzleInstance gen_puzzle(int houses, int categories, std::uint64_t seed) {
    PuzzleInstance p;
    p.houses = houses;
    p.categories = categories;
    validate(p);
    Rng rng(seed);
    PuzzleSolution s(static_cast<std::size_t>(houses), std::vector<int>(static_cast<std::size_t>(categories)));
    for (int c = 0; c < categories; ++c) {
        std::vector<int> perm(static_cast<std::size_t>(houses));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        for (int h = 0; h < houses; ++h) s[h][c] = perm[static_cast<std::size_t>(h)];
    }
    // every true relation between two attributes in the same or adjacent houses
    std::vector<Constraint> cand;
    for (int h1 = 0; h1 < houses; ++h1)
        for (int c1 = 0; c1 < categories; ++c1)
            for (int h2 = h1; h2 < houses && h2 <= h1 + 1; ++h2)
                for (int c2 = 0; c2 < categories; ++c2) {
                    if (h1 == h2 && c2 <= c1) continue;
                    Attr a{c1, s[h1][c1]}, b{c2, s[h2][c2]};
                    Constraint c;
                    if (h1 == h2) c = rng.coin() ? Constraint{a, Relation::Same, b} : Constraint{b, Relation::Same, a};
                    else c = rng.coin() ? Constraint{b, Relation::Right, a} : Constraint{a, Relation::Left, b};
                    cand.push_back(c);
                }
    rng.shuffle(cand);
    p.constraints = cand;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        auto it = std::find(p.constraints.begin(), p.constraints.end(), cand[i]);
        Constraint dropped = *it;
        auto pos = p.constraints.erase(it);
        if (brute_force_puzzle(p, 2).size() != 1) p.constraints.insert(pos, dropped);
    }
    return p;
}

std::string describe(const PuzzleInstance& p, const Attr& a) {
    const std::string v = category_values(a.cat, p.houses).at(static_cast<std::size_t>(a.value));
    switch (a.cat) {
        case 0: return "the " + v + " house";
        case 1: return "the " + v;
        case 2: return "the one who keeps " + v;
        case 3: return "the one who drinks " + v;
        default: return "the one who smokes " + v;
    }
}

TokenSeq puzzle_prompt(const PuzzleInstance& p) {
    TokenSeq s;
    TokenWriter w(s);
    w << kStartOfText;
    for (std::size_t k = 0; k < p.constraints.size(); ++k) {
        const Constraint& c = p.constraints[k];
        w << ("Constraint#" + std::to_string(k + 1)) << ":";
        w.words(describe(p, c.x)).words(relation_phrase(c.rel)).words(describe(p, c.y));
    }
    w << kEndOfPrompt;
    return s;
}

PuzzleTrace puzzle_trace(const PuzzleInstance& p) {
    validate(p);
    PuzzleTrace t;
    t.prompt = puzzle_prompt(p);
    Solver solver(p, t.response);
    Grid full(static_cast<std::size_t>(p.houses),
              std::vector<Mask>(static_cast<std::size_t>(p.categories), (Mask(1) << p.houses) - 1));
    std::vector<int> live(p.constraints.size());
    std::iota(live.begin(), live.end(), 0);
    if (auto g = solver.fresh(full, live)) {
        PuzzleSolution s(g->size());
        for (std::size_t h = 0; h < g->size(); ++h)
            for (Mask m : (*g)[h]) s[h].push_back(std::countr_zero(m));
        const auto nat = category_values(kNationality, p.houses);
        const auto pets = category_values(kPet, p.houses);
        const int fish = static_cast<int>(std::find(pets.begin(), pets.end(), "Fish") - pets.begin());
        for (std::size_t h = 0; h < s.size(); ++h)
            if (s[h][kPet] == fish) {
                t.fish_house = static_cast<int>(h) + 1;
                t.fish_owner = nat[static_cast<std::size_t>(s[h][kNationality])];
            }
        TokenWriter w(t.response);
        w << "=>" << ("House#" + std::to_string(t.fish_house)) << "owns" << "the" << "Fish" << "=>" << "the"
          << t.fish_owner << "owns" << "the" << "Fish";
        t.solution = std::move(s);
    }
    t.response.push_back(kEndOfText);
    return t;
}

PuzzleInstance parse_puzzle_prompt(std::string_view text, int houses, int categories) {
    std::string s = normalize_whitespace(text);
    auto strip = [&](const std::string& tok) {
        if (auto pos = s.find(tok); pos != std::string::npos) s.erase(pos, tok.size());
    };
    strip(special_surfaces()[static_cast<std::size_t>(TokenKind::StartOfText)]);
    strip(special_surfaces()[static_cast<std::size_t>(TokenKind::EndOfPrompt)]);
    s = normalize_whitespace(s);

    // split on "Constraint#k :" markers
    std::vector<std::string> bodies;
    for (std::size_t k = 1;; ++k) {
        std::string head = "Constraint#" + std::to_string(k) + " :";
        std::size_t pos = s.find(head);
        if (pos == std::string::npos) break;
        if (k == 1 && pos != 0) throw TaskError("puzzle prompt: unexpected text before Constraint#1");
        std::size_t start = pos + head.size();
        std::size_t next = s.find("Constraint#" + std::to_string(k + 1) + " :", start);
        bodies.push_back(normalize_whitespace(s.substr(start, next == std::string::npos ? std::string::npos : next - start)));
    }
    if (bodies.empty() && !s.empty()) throw TaskError("puzzle prompt: no constraints found");

    struct Raw {
        int cat;
        int pool_index;
    };
    auto parse_desc = [](const std::string& d) -> Raw {
        static const std::vector<std::pair<std::string, std::string>> forms = {
            {"the ", " house"}, {"the one who keeps ", ""}, {"the one who drinks ", ""}, {"the one who smokes ", ""},
            {"the ", ""}};
        static const int form_cat[] = {0, 2, 3, 4, 1};
        for (std::size_t f = 0; f < forms.size(); ++f) {
            const auto& [pre, post] = forms[f];
            if (d.size() <= pre.size() + post.size() || d.compare(0, pre.size(), pre) != 0) continue;
            if (!post.empty() && d.compare(d.size() - post.size(), post.size(), post) != 0) continue;
            std::string v = d.substr(pre.size(), d.size() - pre.size() - post.size());
            const auto& pool = kPools[static_cast<std::size_t>(form_cat[f])];
            auto it = std::find(pool.begin(), pool.end(), v);
            if (it != pool.end()) return {form_cat[f], static_cast<int>(it - pool.begin())};
        }
        throw TaskError("puzzle prompt: cannot read '" + d + "'");
    };

    std::vector<std::tuple<Raw, Relation, Raw>> raws;
    int need_h = 3, need_c = 3;
    for (const auto& b : bodies) {
        bool found = false;
        for (Relation r : {Relation::Right, Relation::Left, Relation::Same}) {
            std::string phrase = std::string(" ") + relation_phrase(r) + " ";
            std::size_t pos = b.find(phrase);
            if (pos == std::string::npos) continue;
            Raw x = parse_desc(b.substr(0, pos)), y = parse_desc(b.substr(pos + phrase.size()));
            for (const Raw& a : {x, y}) {
                need_h = std::max(need_h, a.pool_index + 1);
                need_c = std::max(need_c, a.cat + 1);
            }
            raws.emplace_back(x, r, y);
            found = true;
            break;
        }
        if (!found) throw TaskError("puzzle prompt: no relation in '" + b + "'");
    }
    PuzzleInstance p;
    p.houses = houses ? houses : need_h;
    p.categories = categories ? categories : need_c;
    if (p.houses < need_h || p.categories < need_c) throw TaskError("puzzle prompt: values outside the given sizes");
    validate(p);
    auto to_attr = [&](const Raw& r) {
        const auto& pool = kPools[static_cast<std::size_t>(r.cat)];
        auto vals = category_values(r.cat, p.houses);
        int idx = static_cast<int>(std::find(vals.begin(), vals.end(), pool[static_cast<std::size_t>(r.pool_index)]) -
                                   vals.begin());
        return Attr{r.cat, idx};
    };
    for (const auto& [x, r, y] : raws) p.constraints.push_back({to_attr(x), r, to_attr(y)});
    return p;
}

}  // namespace pencil
