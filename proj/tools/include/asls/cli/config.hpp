#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asls/objective.hpp"
#include "asls/optimizer.hpp"

namespace asls::cli {

/// Invalid experiment configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A run block after parsing. Values that depend on the problem (the objective's
/// smoothness bound, the b/n smoothing factor) are filled in by resolve().
struct NamedRun {
    std::string name;
    RunConfig config;
    bool auto_l_max = false;
    bool auto_smoothing = false;

    void resolve(const FiniteSumObjective& obj);
};

/// Parsed experiment file. The problem block is kept as JSON and materialized
/// on demand so that generated data can be cached by content hash.
struct ExperimentConfig {
    nlohmann::json problem;
    std::vector<NamedRun> runs;
    int repetitions = 1;
    std::filesystem::path output_dir = "out";

    void validate() const;
};

/// Reads the JSON experiment format documented in README.md.
[[nodiscard]] ExperimentConfig parse_experiment(const nlohmann::json& doc);
[[nodiscard]] ExperimentConfig load_experiment(const std::filesystem::path& path);

/// Parses one run block (already merged over the "defaults" block).
[[nodiscard]] NamedRun parse_run(const nlohmann::json& block);

struct Problem {
    std::shared_ptr<const FiniteSumObjective> objective;
    /// Starting point for a run with the given seed.
    std::function<Weights(std::uint64_t)> initial_point;
    std::string description;
};

/// Stable 64-bit FNV-1a digest of the canonical JSON dump.
[[nodiscard]] std::uint64_t content_hash(const nlohmann::json& value);
[[nodiscard]] std::string hex_digest(std::uint64_t hash);

/// File stem under the data cache for a generated problem, e.g.
/// "separable-3f2a...". Empty for problems loaded from user files.
[[nodiscard]] std::string cache_stem(const nlohmann::json& problem);

/// Writes the generated dataset files for `problem` into `dir` and returns them.
std::vector<std::filesystem::path> write_problem_data(const nlohmann::json& problem,
                                                      const std::filesystem::path& dir);

/// Materializes the problem, reading from / writing to `cache_dir` when given.
[[nodiscard]] Problem make_problem(const nlohmann::json& problem,
                                   const std::optional<std::filesystem::path>& cache_dir);

/// ASLS_DATA_DIR, when set and nonempty.
[[nodiscard]] std::optional<std::filesystem::path> data_dir_from_env();

}  // namespace asls::cli
