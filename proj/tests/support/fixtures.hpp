#pragma once

#include "chainsynth/family.hpp"
#include "chainsynth/sketch/elaborate.hpp"
#include "chainsynth/sketch/parser.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace chainsynth::testing {

inline std::string sketch_path(const std::string& name) { return std::string(CHAINSYNTH_SKETCH_DIR) + "/" + name; }

inline std::string read_sketch(const std::string& name) {
    std::ifstream in(sketch_path(name));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Five-state running example: k2 picks the second successor of state 0,
/// k3 the successor of states 2 and 3. Option labels are the target states.
inline Family example_family() {
    std::vector<Hole> holes{{"k2", {"2", "3"}, {0, 0}}, {"k3", {"2", "4"}, {0, 0}}};
    std::vector<std::vector<Branch>> rows(5);
    rows[0] = {{0.5, FixedTarget{1}}, {0.5, HoleTarget{{0}, {2, 3}}}};
    rows[1] = {{0.1, FixedTarget{0}}, {0.9, FixedTarget{1}}};
    rows[2] = {{1.0, HoleTarget{{1}, {2, 4}}}};
    rows[3] = {{0.2, FixedTarget{3}}, {0.8, HoleTarget{{1}, {2, 4}}}};
    rows[4] = {{1.0, FixedTarget{4}}};
    return Family(5, 0, std::move(holes), std::move(rows), {}, CostModel::Structural);
}

// r1..r4 in the order used throughout the tests.
inline Realisation r1() { return {{0, 0}}; }   // k2=2, k3=2
inline Realisation r2() { return {{0, 1}}; }   // k2=2, k3=4
inline Realisation r3() { return {{1, 0}}; }   // k2=3, k3=2
inline Realisation r4() { return {{1, 1}}; }   // k2=3, k3=4

inline Specification spec(std::size_t n, std::vector<StateIndex> goal, ComparisonOp op, double threshold) {
    Specification s;
    s.goal = StateSet(n, goal);
    s.op = op;
    s.threshold = threshold;
    return s;
}

} // namespace chainsynth::testing
