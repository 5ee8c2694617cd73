#pragma once

#include "chainsynth/engines/random_family.hpp"
#include "chainsynth/engines/synthesis.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chainsynth::cli {

struct BenchConfig {
    std::uint64_t seed = 0;
    std::size_t instances = 100;
    RandomFamilyParams params;
    std::vector<EngineKind> engines{EngineKind::Enumeration, EngineKind::Cegar, EngineKind::Cegis};
    std::vector<QueryKind> queries{QueryKind::Partition, QueryKind::Max};
    std::size_t threads = 1;
    /// When set, runs the single constructed pruning instance instead of
    /// random families.
    std::optional<std::pair<std::size_t, std::size_t>> pruning;
};

struct EngineTotals {
    std::uint64_t runs = 0;
    std::uint64_t candidates = 0;
    std::uint64_t checks = 0;
    double wall_ms = 0.0;
};

struct BenchFailure {
    std::size_t instance;
    std::string query;
    std::string message;
    /// Family JSON, spec and restriction that still reproduce the disagreement.
    std::string repro;
};

struct BenchReport {
    std::size_t instances = 0;
    std::uint64_t realisations = 0;
    std::map<std::string, EngineTotals> engines;
    std::vector<BenchFailure> failures;
    double wall_ms = 0.0;
};

/// Runs every compatible engine on each instance and compares outcomes with
/// the enumeration oracle.
[[nodiscard]] BenchReport run_bench(const BenchConfig& config);

/// Empty when the outcomes agree, otherwise a description of the mismatch.
[[nodiscard]] std::string compare_outcomes(const Family& fam, const SynthesisQuery& query,
                                           const SynthesisOutcome& oracle, const SynthesisOutcome& other);

} // namespace chainsynth::cli
