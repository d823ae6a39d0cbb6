#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "asls/momentum.hpp"
#include "asls/objective.hpp"
#include "asls/preconditioner.hpp"
#include "asls/step_size.hpp"
#include "asls/types.hpp"

namespace asls {

enum class OptimizerKind { sgd, adagrad, rmsprop, adam, amsgrad };
enum class Averaging { last, uniform };

[[nodiscard]] std::string_view to_string(OptimizerKind kind) noexcept;
[[nodiscard]] OptimizerKind optimizer_kind_from_string(std::string_view name);
[[nodiscard]] PreconditionerKind preconditioner_for(OptimizerKind kind) noexcept;

struct RunConfig {
    OptimizerKind optimizer = OptimizerKind::amsgrad;
    Index batch_size = 1;
    int epochs = 1;
    std::uint64_t seed = 0;
    double epsilon = 1e-8;
    double beta2 = 0.999;
    bool bias_correction = true;
    std::optional<PrecondBounds> clamp;
    MomentumConfig momentum;
    StepSizeConfig step_size;
    Averaging averaging = Averaging::uniform;
    /// Stop after this many steps instead of epochs * ceil(n / b).
    std::optional<Index> max_steps;
    /// Keep diag(A_k) for every step in the trajectory.
    bool record_diagonals = false;
    /// Keep every iterate w_k (needed to measure the iterate radius D).
    bool record_iterates = false;
    /// Step counts T at which the uniform average of w_1..w_T is captured.
    std::vector<Index> average_checkpoints;

    [[nodiscard]] PreconditionerOptions preconditioner_options() const;
    void validate(Index n) const;
};

/// Mutable state of a single run.
struct OptimizerState {
    Weights w;
    /// Moving-average buffer m_k; zero at k = 0.
    Weights m;
    /// w_{k-1} for heavy-ball; equal to w at k = 0.
    Weights w_prev;
    /// eta_{k-1}.
    double eta_prev = 1.0;
    /// Number of steps taken so far.
    Index k = 0;
    std::mt19937_64 rng;

    OptimizerState(Weights w0, double eta_init, std::uint64_t seed);
};

struct StepRecord {
    Index k = 0;
    int epoch = 0;
    double batch_loss = 0.0;
    double eta = 0.0;
    double eta_start = 0.0;
    double eta_bound = 0.0;
    double grad_norm_sq = 0.0;
    double precond_norm_sq = 0.0;
    int backtracks = 0;
    bool warning = false;
    double a_min = 0.0;
    double a_max = 0.0;
    double trace_a = 0.0;
    /// min_j (A_k[j] - A_{k-1}[j]); +inf on the first step.
    double min_delta_a = 0.0;
    /// Full diag(A_k) when RunConfig::record_diagonals is set.
    std::vector<double> diagonal;
};

struct EpochRecord {
    int epoch = 0;
    /// Index of the last step in the epoch.
    Index k = 0;
    double train_loss = 0.0;
};

/// Everything needed to audit a run after the fact.
struct TrajectoryRecord {
    OptimizerKind optimizer = OptimizerKind::sgd;
    PreconditionerOptions preconditioner;
    StepSizeConfig step_size;
    MomentumConfig momentum;
    Index dim = 0;
    Index n = 0;
    Index batch_size = 0;
    std::uint64_t seed = 0;
    /// Analytic L_max of the objective, when known.
    std::optional<double> l_max;
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
};

/// One iteration: sample (done by the caller), gradient, form A_k, choose
/// eta_k, update momentum, update iterate. Throws NumericalError on a
/// non-finite gradient, step-size or iterate.
StepRecord step(OptimizerState& state, const FiniteSumObjective& obj, BatchView batch,
                Preconditioner& precond, StepSizeController& controller,
                const MomentumConfig& momentum);

/// b indices drawn uniformly with replacement from [0, n).
[[nodiscard]] std::vector<Index> sample_batch(std::mt19937_64& rng, Index n, Index b);

/// Coordinatewise mean of a nonempty list of equal-size vectors.
[[nodiscard]] Weights uniform_average(std::span<const Weights> iterates);

struct RunResult {
    Weights final_weights;
    /// (1/T) sum_{k=1..T} w_k for uniform averaging, else w_T.
    Weights averaged_weights;
    TrajectoryRecord trajectory;
    /// (T, average of w_1..w_T) for each requested checkpoint reached.
    std::vector<std::pair<Index, Weights>> checkpoint_averages;
    /// w_0, w_1, ..., w_T when record_iterates is set.
    std::vector<Weights> iterates;
};

[[nodiscard]] Index steps_per_epoch(Index n, Index batch_size);

/// Runs the configured optimizer from w0 (zero when absent). Deterministic in
/// (objective, config).
[[nodiscard]] RunResult run(const FiniteSumObjective& obj, const RunConfig& config,
                            std::optional<Weights> w0 = std::nullopt);

}  // namespace asls
