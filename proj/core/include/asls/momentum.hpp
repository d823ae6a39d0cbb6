#pragma once

#include <string_view>

#include "asls/types.hpp"

namespace asls {

enum class MomentumKind { none, moving_average, heavy_ball };

[[nodiscard]] std::string_view to_string(MomentumKind kind) noexcept;
[[nodiscard]] MomentumKind momentum_kind_from_string(std::string_view name);

struct MomentumConfig {
    MomentumKind kind = MomentumKind::none;
    /// Moving-average coefficient, in [0, 1).
    double beta = 0.9;
    /// Heavy-ball coefficient, in [0, 1).
    double gamma = 0.25;

    void validate() const;
};

/// beta * m_prev + (1 - beta) * g
[[nodiscard]] Weights moving_average(const Weights& m_prev, const Weights& g, double beta);

/// w - eta * direction + gamma * (w - w_prev). The momentum term is not scaled by eta.
[[nodiscard]] Weights heavy_ball_update(const Weights& w, const Weights& w_prev, double eta,
                                        const Weights& direction, double gamma);

/// Moving-average momentum rewritten in heavy-ball form:
///
///   w_{k+1} = w_k - gradient_scale * A_k^-1 g_k + momentum_diagonal .* (w_k - w_{k-1})
///
/// with gradient_scale = eta_k (1 - beta) and
/// momentum_diagonal = beta (eta_k / eta_{k-1}) A_{k-1} / A_k.
struct HeavyBallForm {
    double gradient_scale = 0.0;
    Weights momentum_diagonal;

    /// True when the momentum operator is a multiple of the identity.
    [[nodiscard]] bool is_scalar() const noexcept;

    [[nodiscard]] Weights apply(const Weights& w, const Weights& w_prev, const Weights& g,
                                const Weights& a_k) const;
};

[[nodiscard]] HeavyBallForm amsgrad_to_hb_equivalent(double eta_k, double eta_km1, double beta,
                                                     const Weights& a_k, const Weights& a_km1);

}  // namespace asls
