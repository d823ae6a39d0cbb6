#pragma once

#include <optional>

#include "asls/types.hpp"

namespace asls {

/// Finite-sum objective f(w) = (1/n) sum_i f_i(w).
///
/// Implementations must be pure: value() and add_grad() may be called
/// concurrently from independent runs and must return the same result for the
/// same arguments.
class FiniteSumObjective {
public:
    virtual ~FiniteSumObjective() = default;

    /// Number of components n.
    [[nodiscard]] virtual Index size() const = 0;
    /// Dimension d of the weight vector.
    [[nodiscard]] virtual Index dim() const = 0;

    [[nodiscard]] virtual double value(Index i, const Weights& w) const = 0;

    /// out += scale * grad f_i(w)
    virtual void add_grad(Index i, const Weights& w, double scale, Weights& out) const = 0;

    /// Infimum of f_i. Nonnegative losses default to 0.
    [[nodiscard]] virtual double f_star(Index /*i*/) const { return 0.0; }

    /// Analytic bound on max_i L_i, when the problem knows one.
    [[nodiscard]] virtual std::optional<double> smoothness_bound() const { return std::nullopt; }

    [[nodiscard]] Weights grad(Index i, const Weights& w) const;

    /// Mean of value(i, w) over the batch.
    [[nodiscard]] virtual double batch_value(BatchView batch, const Weights& w) const;
    /// Mean of grad(i, w) over the batch.
    [[nodiscard]] virtual Weights batch_grad(BatchView batch, const Weights& w) const;
    /// Mean of f_star(i) over the batch.
    [[nodiscard]] double batch_f_star(BatchView batch) const;

    /// Full training loss f(w).
    [[nodiscard]] double full_value(const Weights& w) const;
    [[nodiscard]] Weights full_grad(const Weights& w) const;

protected:
    void check_batch(BatchView batch) const;
};

}  // namespace asls
