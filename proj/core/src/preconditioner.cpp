#include "asls/preconditioner.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace asls {

std::string_view to_string(PreconditionerKind kind) noexcept {
    switch (kind) {
        case PreconditionerKind::identity: return "identity";
        case PreconditionerKind::adagrad: return "adagrad";
        case PreconditionerKind::rmsprop: return "rmsprop";
        case PreconditionerKind::adam: return "adam";
        case PreconditionerKind::amsgrad: return "amsgrad";
    }
    return "unknown";
}

PreconditionerKind preconditioner_kind_from_string(std::string_view name) {
    for (auto kind : {PreconditionerKind::identity, PreconditionerKind::adagrad,
                      PreconditionerKind::rmsprop, PreconditionerKind::adam,
                      PreconditionerKind::amsgrad}) {
        if (to_string(kind) == name) {
            return kind;
        }
    }
    throw std::invalid_argument("unknown preconditioner kind '" + std::string(name) + "'");
}

void PrecondBounds::validate() const {
    if (!(a_min > 0.0) || !(a_min <= a_max) || !std::isfinite(a_max)) {
        throw std::invalid_argument("preconditioner bounds must satisfy 0 < a_min <= a_max");
    }
}

void PreconditionerOptions::validate() const {
    if (!(beta2 >= 0.0 && beta2 < 1.0)) {
        throw std::invalid_argument("beta2 must lie in [0, 1)");
    }
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
        throw std::invalid_argument("epsilon must be finite and nonnegative");
    }
    if (clamp) {
        clamp->validate();
    }
}

Preconditioner::Preconditioner(PreconditionerOptions options, Index dim)
    : options_(options),
      second_moment_(Weights::Zero(static_cast<Eigen::Index>(dim))) {
    options_.validate();
    if (options_.kind == PreconditionerKind::identity) {
        diag_ = Weights::Ones(static_cast<Eigen::Index>(dim));
    } else {
        diag_ = Weights::Constant(static_cast<Eigen::Index>(dim), options_.epsilon);
    }
}

double Preconditioner::correction() const {
    const bool corrected = options_.bias_correction &&
                           (options_.kind == PreconditionerKind::adam ||
                            options_.kind == PreconditionerKind::amsgrad);
    if (!corrected || updates_ == 0) {
        return 1.0;
    }
    return 1.0 - std::pow(options_.beta2, static_cast<double>(updates_));
}

Weights Preconditioner::corrected_second_moment() const {
    return second_moment_ / correction();
}

void Preconditioner::update(const Weights& g) {
    require_same_dim(g, diag_, "Preconditioner::update");
    if (const Index j = first_non_finite(g); j != dim()) {
        throw NumericalError("non-finite gradient entry at coordinate " + std::to_string(j) +
                             " passed to preconditioner");
    }
    ++updates_;
    const double eps = options_.epsilon;
    const double b2 = options_.beta2;
    switch (options_.kind) {
        case PreconditionerKind::identity:
            break;
        case PreconditionerKind::adagrad:
            second_moment_.array() += g.array().square();
            diag_ = second_moment_.array().sqrt() + eps;
            break;
        case PreconditionerKind::rmsprop:
            second_moment_ = b2 * second_moment_.array() + (1.0 - b2) * g.array().square();
            diag_ = second_moment_.array().sqrt() + eps;
            break;
        case PreconditionerKind::adam:
            second_moment_ = b2 * second_moment_.array() + (1.0 - b2) * g.array().square();
            diag_ = (second_moment_.array() / correction()).sqrt() + eps;
            break;
        case PreconditionerKind::amsgrad: {
            second_moment_ = b2 * second_moment_.array() + (1.0 - b2) * g.array().square();
            const Weights candidate = (second_moment_.array() / correction()).sqrt() + eps;
            diag_ = diag_.cwiseMax(candidate);
            break;
        }
    }
    if (options_.clamp) {
        clamp_eigenvalues(*options_.clamp);
    }
}

void Preconditioner::check_invertible() const {
    for (Eigen::Index j = 0; j < diag_.size(); ++j) {
        if (!(diag_[j] > 0.0)) {
            throw NumericalError("preconditioner entry A[" + std::to_string(j) +
                                 "] is zero; use epsilon > 0");
        }
    }
}

Weights Preconditioner::apply_inverse(const Weights& v) const {
    require_same_dim(v, diag_, "Preconditioner::apply_inverse");
    check_invertible();
    return v.cwiseQuotient(diag_);
}

double Preconditioner::norm_sq(const Weights& v) const {
    require_same_dim(v, diag_, "Preconditioner::norm_sq");
    check_invertible();
    // Same accumulation order as sum_sq().
    double acc = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        acc += v[j] * v[j] / diag_[j];
    }
    return acc;
}

void Preconditioner::clamp_eigenvalues(const PrecondBounds& bounds) {
    bounds.validate();
    diag_ = diag_.cwiseMax(bounds.a_min).cwiseMin(bounds.a_max);
}

double Preconditioner::trace() const noexcept {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < diag_.size(); ++j) {
        acc += diag_[j];
    }
    return acc;
}

double Preconditioner::min_diagonal() const noexcept {
    return diag_.size() == 0 ? 0.0 : diag_.minCoeff();
}

double Preconditioner::max_diagonal() const noexcept {
    return diag_.size() == 0 ? 0.0 : diag_.maxCoeff();
}

}  // namespace asls
