#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pencil/sat.hpp"

namespace pencil {

// Categories in order: Color, Nationality, Pet, Drink, Smoke. A puzzle with
// k categories and h houses uses the first k categories and, in each, the
// first h values of the category pool sorted alphabetically.
inline constexpr int kMaxHouses = 5;
inline constexpr int kMaxCategories = 5;

const std::string& category_name(int cat);
std::vector<std::string> category_values(int cat, int houses);

enum class Relation { Right, Left, Same };

struct Attr {
    int cat = 0;
    int value = 0;  // index into category_values(cat, houses)
    friend bool operator==(const Attr&, const Attr&) = default;
};

// Right: house(x) = house(y) + 1. Left: house(x) = house(y) - 1.
struct Constraint {
    Attr x;
    Relation rel = Relation::Same;
    Attr y;
    friend bool operator==(const Constraint&, const Constraint&) = default;
};

struct PuzzleInstance {
    int houses = 3;
    int categories = 3;
    std::vector<Constraint> constraints;
    friend bool operator==(const PuzzleInstance&, const PuzzleInstance&) = default;
};

// grid[house][cat] = value index
using PuzzleSolution = std::vector<std::vector<int>>;

void validate(const PuzzleInstance& p);

// Checks a complete assignment (each category a permutation) against the constraints.
bool satisfies(const PuzzleInstance& p, const PuzzleSolution& s);

// Enumerates assignments category by category with pruning; stops after limit.
std::vector<PuzzleSolution> brute_force_puzzle(const PuzzleInstance& p, std::size_t limit = 2);

// Plants a random solution, then drops relations from a shuffled candidate
// set while the solution stays unique.
PuzzleInstance gen_puzzle(int houses, int categories, std::uint64_t seed);

struct PuzzleTrace : TaskTrace {
    std::optional<PuzzleSolution> solution;
    int fish_house = 0;  // 1-based, 0 when unsolved
    std::string fish_owner;
};

// Constraint propagation with branching, in the house/category block format.
PuzzleTrace puzzle_trace(const PuzzleInstance& p);

TokenSeq puzzle_prompt(const PuzzleInstance& p);
std::string describe(const PuzzleInstance& p, const Attr& a);

// Sizes are inferred from the values mentioned (at least 3 each) unless given.
PuzzleInstance parse_puzzle_prompt(std::string_view text, int houses = 0, int categories = 0);

}  // namespace pencil
