#pragma once

#include "chainsynth/engines/synthesis.hpp"
#include "chainsynth/sketch/elaborate.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace chainsynth::cli {

/// A loaded model plus what is needed to evaluate goal predicates on it.
struct LoadedModel {
    sketch::SketchProgram program;
    sketch::ElaboratedSketch sketch;
};

/// Reads a `.sk` sketch or a JSON family. For JSON the goal language has one
/// variable `s`, the state index.
[[nodiscard]] LoadedModel load_model(const std::string& path, const std::string& format);

struct ParsedSpec {
    ComparisonOp op;
    double threshold;
    std::string goal;
};

/// `P>=0.1 [F s=4]`
[[nodiscard]] ParsedSpec parse_spec(const std::string& text);

/// Runs the command line; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace chainsynth::cli
