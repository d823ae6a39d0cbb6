#pragma once

#include <optional>
#include <string_view>

#include "asls/types.hpp"

namespace asls {

enum class PreconditionerKind { identity, adagrad, rmsprop, adam, amsgrad };

[[nodiscard]] std::string_view to_string(PreconditionerKind kind) noexcept;
[[nodiscard]] PreconditionerKind preconditioner_kind_from_string(std::string_view name);

/// Eigenvalue interval [a_min, a_max] for a diagonal preconditioner.
struct PrecondBounds {
    double a_min = 0.0;
    double a_max = 0.0;

    [[nodiscard]] double kappa() const noexcept { return a_max / a_min; }
    /// Throws std::invalid_argument unless 0 < a_min <= a_max.
    void validate() const;
};

struct PreconditionerOptions {
    PreconditionerKind kind = PreconditionerKind::identity;
    /// Second-moment decay for rmsprop/adam/amsgrad.
    double beta2 = 0.999;
    /// Added to the square-rooted accumulator: A = sqrt(G) + epsilon.
    double epsilon = 1e-8;
    /// Divide G by (1 - beta2^k) before the square root (adam/amsgrad only).
    bool bias_correction = true;
    /// Projection of every diagonal entry after each update.
    std::optional<PrecondBounds> clamp;

    void validate() const;
};

/// Diagonal preconditioner A_k built from the accumulator G_k.
///
/// Recurrences, with g the gradient passed to update() and k counted from 1:
///
///   adagrad  G <- G + g*g                      A <- sqrt(G) + eps
///   rmsprop  G <- b2 G + (1 - b2) g*g          A <- sqrt(G) + eps
///   adam     G as rmsprop                      A <- sqrt(G / (1 - b2^k)) + eps
///   amsgrad  G as rmsprop                      A <- max(A, sqrt(G / (1 - b2^k)) + eps)
///
/// G is stored without bias correction. Before the first update A = sqrt(0) + eps.
/// The identity kind keeps A = 1 (before any clamp).
class Preconditioner {
public:
    Preconditioner(PreconditionerOptions options, Index dim);

    /// Throws NumericalError on non-finite entries of g.
    void update(const Weights& g);

    /// v / A, coordinatewise. Throws NumericalError naming the first zero entry of A.
    [[nodiscard]] Weights apply_inverse(const Weights& v) const;
    /// sum_j v_j^2 / A_j
    [[nodiscard]] double norm_sq(const Weights& v) const;

    /// Projects every entry of A onto [a_min, a_max].
    void clamp_eigenvalues(const PrecondBounds& bounds);

    [[nodiscard]] double trace() const noexcept;
    [[nodiscard]] double min_diagonal() const noexcept;
    [[nodiscard]] double max_diagonal() const noexcept;

    [[nodiscard]] const Weights& diagonal() const noexcept { return diag_; }
    /// Raw accumulator G (no bias correction applied).
    [[nodiscard]] const Weights& second_moment() const noexcept { return second_moment_; }
    /// G / (1 - beta2^k) for the bias-corrected kinds, G otherwise.
    [[nodiscard]] Weights corrected_second_moment() const;
    [[nodiscard]] Index updates() const noexcept { return updates_; }
    [[nodiscard]] Index dim() const noexcept { return static_cast<Index>(diag_.size()); }
    [[nodiscard]] const PreconditionerOptions& options() const noexcept { return options_; }

private:
    [[nodiscard]] double correction() const;
    void check_invertible() const;

    PreconditionerOptions options_;
    Weights second_moment_;
    Weights diag_;
    Index updates_ = 0;
};

}  // namespace asls
