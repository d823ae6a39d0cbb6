#pragma once

#include <optional>
#include <span>
#include <string>

#include "asls/objective.hpp"
#include "asls/optimizer.hpp"
#include "asls/step_size.hpp"
#include "asls/types.hpp"

namespace asls {

/// Constants entering the convergence bounds. The radius D is measured from a
/// trajectory (see measure_radius) rather than assumed.
struct TheoryInputs {
    double l_max = 1.0;
    double a_min = 1.0;
    double a_max = 1.0;
    double radius = 1.0;
    Index dim = 1;
    double beta = 0.0;
    double sigma_sq = 0.0;

    [[nodiscard]] double kappa() const noexcept { return a_max / a_min; }
    void validate() const;
};

/// max_k ||w_k - reference||
[[nodiscard]] double measure_radius(std::span<const Weights> iterates, const Weights& reference);

/// sigma^2 = (1/n) sum_i (f_i(w*) - f_i*). Components below f_i* by at most 1e-12
/// count as zero; by more than 1e-9 throws std::domain_error.
[[nodiscard]] double estimate_sigma_sq(const FiniteSumObjective& obj, const Weights& w_star);

struct BoundViolation {
    Index step = 0;
    double eta = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::string reason;
};

struct StepBoundReport {
    std::string rule;
    Index steps = 0;
    Index violations = 0;
    /// Constant step-sizes: the bounds are the constant itself.
    bool vacuous = false;
    std::optional<BoundViolation> first_violation;

    [[nodiscard]] double violation_fraction() const noexcept;
    [[nodiscard]] bool passed() const noexcept { return violations == 0; }
    [[nodiscard]] std::string to_text() const;
    [[nodiscard]] std::string to_json() const;
};

/// Checks every step against the step-size range guaranteed on L-smooth batches:
///
///   Lipschitz line-search  [gamma_bt min{start, 2(1-c)/L},            min{start, eta_max}]
///   Armijo line-search     [gamma_bt min{start, 2 a_min(A_k)(1-c)/L}, min{start, eta_max}]
///   SPS                    [min{bound, 1/(2cL)},                      bound]
///   Armijo SPS             [min{bound, a_min(A_k)/(2cL)},             bound]
///
/// plus eta_k <= eta_{k-1} for conservative controllers. `ctrl` is the
/// controller configuration the trajectory was produced with.
[[nodiscard]] StepBoundReport check_step_bounds(const TrajectoryRecord& traj,
                                                const TheoryInputs& theory,
                                                const StepSizeConfig& ctrl);
[[nodiscard]] StepBoundReport check_step_bounds(const TrajectoryRecord& traj,
                                                const TheoryInputs& theory);

/// First step k >= 1 where some diagonal entry decreased, if any. Uses the
/// stored diagonals when present, otherwise min_delta_a.
[[nodiscard]] std::optional<Index> first_preconditioner_decrease(const TrajectoryRecord& traj);

/// True iff diag(A_k) is non-decreasing at every step (exact comparison).
[[nodiscard]] bool check_amsgrad_monotone(const TrajectoryRecord& traj);

struct AdagradLemmaReport {
    Index steps = 0;
    /// sum_k ||g_k||^2_{A_k^-1}
    double precond_norm_sum = 0.0;
    /// 2 Tr(A_T)
    double twice_trace = 0.0;
    /// Tr(A_T) - d eps
    double trace_without_eps = 0.0;
    /// sqrt(d sum_k ||g_k||^2)
    double trace_bound = 0.0;
    bool norm_sum_holds = false;
    bool trace_holds = false;

    [[nodiscard]] bool passed() const noexcept { return norm_sum_holds && trace_holds; }
    [[nodiscard]] double norm_sum_margin() const noexcept { return twice_trace - precond_norm_sum; }
    [[nodiscard]] double trace_margin() const noexcept { return trace_bound - trace_without_eps; }
    [[nodiscard]] std::string to_text() const;
    [[nodiscard]] std::string to_json() const;
};

/// Verifies sum_k ||g_k||^2_{A_k^-1} <= 2 Tr(A_T) and Tr(A_T) - d eps <= sqrt(d sum_k ||g_k||^2)
/// up to a 1e-12 relative rounding slack. Throws std::invalid_argument for
/// trajectories that are not unclamped AdaGrad.
[[nodiscard]] AdagradLemmaReport check_adagrad_lemmas(const TrajectoryRecord& traj);

/// Constant in the rate bound of each theorem:
///   adagrad_constant           alpha = 1/2 (D^2/eta + 2 eta)^2 d L_max
///   amsgrad_constant           2 D^2 d a_max L_max / a_min
///   amsgrad_*_momentum         ((1+beta)/(1-beta))^2 2 L_max D^2 d kappa
/// `eta` is only read by adagrad_constant.
[[nodiscard]] double rate_constant(Theorem theorem, const TheoryInputs& inputs, double eta = 1.0);

/// alpha / T + sqrt(alpha) sigma / sqrt(T)
[[nodiscard]] double adagrad_bound(double alpha, double sigma_sq, double t);
/// constant / T + sigma^2
[[nodiscard]] double amsgrad_bound(double constant, double sigma_sq, double t);

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (log T, log value). Needs at least 10 positive points.
[[nodiscard]] RateFit fit_rate(std::span<const double> horizons, std::span<const double> values);

/// a + sqrt(a b): every x with x^2 <= a (x + b) satisfies x <= a + sqrt(a b).
[[nodiscard]] double quadratic_bound(double a, double b);

}  // namespace asls
