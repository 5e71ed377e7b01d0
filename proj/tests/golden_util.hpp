#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pencil/core.hpp"

namespace golden {

inline std::string path(const std::string& name) { return std::string(PENCIL_GOLDEN_DIR) + "/" + name; }

inline std::string read(const std::string& name) {
    std::ifstream in(path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing golden file " + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return pencil::normalize_whitespace(ss.str());
}

// Lines "gen <k> ...", "red <k> ...", "final 0 ...": live context (without the
// prompt) right before and right after each reduction.
struct Steps {
    std::vector<std::string> generated;
    std::vector<std::string> reduced;
    std::string final_response;
};

inline Steps read_steps(const std::string& name) {
    std::ifstream in(path(name), std::ios::binary);
    if (!in) throw std::runtime_error("missing golden file " + name);
    Steps s;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kind, idx;
        ls >> kind >> idx;
        std::string rest;
        std::getline(ls, rest);
        rest = pencil::normalize_whitespace(rest);
        if (kind == "gen") s.generated.push_back(rest);
        else if (kind == "red") s.reduced.push_back(rest);
        else if (kind == "final") s.final_response = rest;
        else throw std::runtime_error("bad golden line in " + name);
    }
    return s;
}

}  // namespace golden
