#pragma once

#include <optional>
#include <string_view>

#include "asls/objective.hpp"
#include "asls/preconditioner.hpp"
#include "asls/types.hpp"

namespace asls {

enum class LineSearchMode { lipschitz, armijo };
enum class SpsMode { plain, armijo };

/// Backtracking line-search parameters.
struct LineSearchConfig {
    LineSearchMode mode = LineSearchMode::armijo;
    /// Sufficient-decrease constant, in (0, 1).
    double c = 0.5;
    double eta_max = 10.0;
    /// Candidate shrink factor gamma_bt, in (0, 1).
    double backtrack_factor = 0.5;
    int max_backtracks = 100;
    /// 0: restart from eta_prev, 1: eta_prev * growth^(b/n), 2: restart from eta_max.
    int reset_option = 1;
    double reset_growth = 2.0;
    /// Enforce eta_k <= eta_{k-1}.
    bool conservative = false;

    void validate() const;
};

/// Stochastic Polyak step-size parameters. c may exceed 1 (the momentum
/// analysis asks for c = (1 + beta) / (1 - beta)).
struct SpsConfig {
    SpsMode mode = SpsMode::armijo;
    double c = 0.5;
    double eta_max = 10.0;
    /// Growth limit eta_k <= tau * eta_{k-1}; tau >= 1.
    std::optional<double> smoothing_tau;
    bool conservative = false;

    void validate() const;
};

struct StepSizeOutcome {
    double eta = 0.0;
    int backtracks = 0;
    /// Line-search ran out of backtracks, or SPS hit a zero gap with a nonzero gradient.
    bool warning = false;
    /// First candidate tried (line-search) or the cap applied (SPS / constant).
    double eta_start = 0.0;
    /// Effective upper bound for this query.
    double eta_bound = 0.0;
};

/// f_B(w - eta * direction) <= f_B(w) - c * eta * decrease
[[nodiscard]] bool sufficient_decrease(const FiniteSumObjective& obj, BatchView batch,
                                       const Weights& w, const Weights& direction,
                                       double decrease, double batch_loss, double c, double eta);

/// Backtracking search along the raw gradient:
/// f_B(w - eta g) <= f_B(w) - c eta ||g||^2. Returns the first accepted
/// candidate in eta_start * gamma_bt^j.
[[nodiscard]] StepSizeOutcome lipschitz_search(const LineSearchConfig& cfg,
                                               const FiniteSumObjective& obj, BatchView batch,
                                               const Weights& w, const Weights& g,
                                               double batch_loss, double eta_start);

/// Backtracking search along the preconditioned direction:
/// f_B(w - eta A^-1 g) <= f_B(w) - c eta ||g||^2_{A^-1}.
[[nodiscard]] StepSizeOutcome armijo_search(const LineSearchConfig& cfg,
                                            const FiniteSumObjective& obj, BatchView batch,
                                            const Weights& w, const Weights& g,
                                            const Preconditioner& precond, double batch_loss,
                                            double eta_start);

/// Initial candidate for the k-th backtracking search.
[[nodiscard]] double reset_start(const LineSearchConfig& cfg, double eta_prev, Index k,
                                 Index batch_size, Index n);

/// Cap on the SPS value: eta_max, tightened by smoothing and by the
/// conservative policy. eta_prev is ignored when absent (first iteration).
[[nodiscard]] double sps_bound(const SpsConfig& cfg, std::optional<double> eta_prev);

/// eta = min{(f_B(w) - f_B*) / (c ||g||^2), bound}.
[[nodiscard]] StepSizeOutcome sps_step(const SpsConfig& cfg, const FiniteSumObjective& obj,
                                       BatchView batch, const Weights& g, double batch_loss,
                                       std::optional<double> eta_prev = std::nullopt);

/// eta = min{(f_B(w) - f_B*) / (c ||g||^2_{A^-1}), bound}.
[[nodiscard]] StepSizeOutcome armijo_sps_step(const SpsConfig& cfg,
                                              const FiniteSumObjective& obj, BatchView batch,
                                              const Weights& g, const Preconditioner& precond,
                                              double batch_loss,
                                              std::optional<double> eta_prev = std::nullopt);

enum class Theorem {
    adagrad_constant,
    amsgrad_constant,
    amsgrad_constant_momentum,
    amsgrad_sps_momentum,
};

[[nodiscard]] std::string_view to_string(Theorem theorem) noexcept;
[[nodiscard]] Theorem theorem_from_string(std::string_view name);

/// Constant step-size prescribed by the AMSGrad convergence results:
///   amsgrad_constant           a_min / (2 L_max)
///   amsgrad_constant_momentum  (1 - beta) / (1 + beta) * a_min / (2 L_max)
/// AdaGrad converges for any constant, and the SPS result sets c instead, so
/// the other theorems throw std::invalid_argument.
[[nodiscard]] double theoretical_constant(Theorem theorem, double l_max, double a_min,
                                          double beta);

/// SPS constant c = (1 + beta) / (1 - beta) used with conservative Armijo SPS and momentum.
[[nodiscard]] double theoretical_sps_c(double beta);

enum class StepSizeKind { constant, lipschitz_ls, armijo_ls, sps, armijo_sps, theory };

[[nodiscard]] std::string_view to_string(StepSizeKind kind) noexcept;
[[nodiscard]] StepSizeKind step_size_kind_from_string(std::string_view name);

/// Step-size fixed from a theorem once the first preconditioner is formed.
/// For AMSGrad without bias correction A is non-decreasing, so min diag(A_0)
/// lower-bounds every later a_min.
struct TheoryStepConfig {
    Theorem theorem = Theorem::amsgrad_constant_momentum;
    double l_max = 1.0;
    double beta = 0.0;
    /// Used instead of the measured minimum when set.
    std::optional<double> a_min;
};

struct StepSizeConfig {
    StepSizeKind kind = StepSizeKind::constant;
    double constant_eta = 1e-2;
    LineSearchConfig line_search;
    SpsConfig sps;
    TheoryStepConfig theory;

    void validate() const;
    [[nodiscard]] bool conservative() const noexcept;
    /// Largest step any query may return.
    [[nodiscard]] double eta_max() const noexcept;
};

/// Everything a controller may look at when choosing eta_k.
struct StepQuery {
    const FiniteSumObjective& obj;
    BatchView batch;
    const Weights& w;
    const Weights& g;
    double batch_loss;
    const Preconditioner& precond;
    Index k;
    /// eta_{k-1}; ignored at k = 0.
    double eta_prev;
};

/// Dispatches to the configured rule. Holds only the theory constant once it
/// has been fixed; eta_{k-1} is supplied by the caller.
class StepSizeController {
public:
    explicit StepSizeController(StepSizeConfig config);

    [[nodiscard]] StepSizeOutcome next(const StepQuery& query);

    /// Value used as eta_{-1} before the first step.
    [[nodiscard]] double initial_eta() const noexcept;
    [[nodiscard]] const StepSizeConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::optional<double> fixed_theory_eta() const noexcept { return theory_eta_; }

private:
    StepSizeConfig config_;
    std::optional<double> theory_eta_;
};

}  // namespace asls
