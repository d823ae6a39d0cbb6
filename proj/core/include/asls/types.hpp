#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace asls {

/// Dense parameter vector. Every optimizer iterate, gradient and diagonal
/// preconditioner lives in one of these.
using Weights = Eigen::VectorXd;

using Index = std::size_t;

/// Mini-batch of component indices into a finite-sum objective. Indices may
/// repeat (batches are drawn with replacement).
using BatchView = std::span<const Index>;

/// Raised when a gradient, iterate or step-size stops being finite, or when a
/// preconditioner cannot be inverted.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] bool all_finite(const Weights& v) noexcept;

/// Sum of squares accumulated left to right. Shared with the preconditioned
/// norm so that an identity preconditioner reproduces it bit for bit.
[[nodiscard]] double sum_sq(const Weights& v) noexcept;

/// Index of the first non-finite entry, or v.size() if there is none.
[[nodiscard]] Index first_non_finite(const Weights& v) noexcept;

void require_same_dim(const Weights& a, const Weights& b, const char* what);

}  // namespace asls
