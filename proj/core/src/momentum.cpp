#include "asls/momentum.hpp"

#include <string>

namespace asls {

std::string_view to_string(MomentumKind kind) noexcept {
    switch (kind) {
        case MomentumKind::none: return "none";
        case MomentumKind::moving_average: return "moving_average";
        case MomentumKind::heavy_ball: return "heavy_ball";
    }
    return "unknown";
}

MomentumKind momentum_kind_from_string(std::string_view name) {
    for (auto k : {MomentumKind::none, MomentumKind::moving_average, MomentumKind::heavy_ball}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown momentum kind '" + std::string(name) + "'");
}

void MomentumConfig::validate() const {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw std::invalid_argument("momentum beta must lie in [0, 1)");
    }
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw std::invalid_argument("heavy-ball gamma must lie in [0, 1)");
    }
}

Weights moving_average(const Weights& m_prev, const Weights& g, double beta) {
    require_same_dim(m_prev, g, "moving_average");
    return beta * m_prev + (1.0 - beta) * g;
}

Weights heavy_ball_update(const Weights& w, const Weights& w_prev, double eta,
                          const Weights& direction, double gamma) {
    require_same_dim(w, w_prev, "heavy_ball_update");
    require_same_dim(w, direction, "heavy_ball_update");
    Weights next = w - eta * direction;
    if (gamma != 0.0) {
        next += gamma * (w - w_prev);
    }
    return next;
}

bool HeavyBallForm::is_scalar() const noexcept {
    return momentum_diagonal.size() == 0 ||
           (momentum_diagonal.array() == momentum_diagonal[0]).all();
}

Weights HeavyBallForm::apply(const Weights& w, const Weights& w_prev, const Weights& g,
                             const Weights& a_k) const {
    require_same_dim(w, g, "HeavyBallForm::apply");
    require_same_dim(w, a_k, "HeavyBallForm::apply");
    return w - gradient_scale * g.cwiseQuotient(a_k) +
           momentum_diagonal.cwiseProduct(w - w_prev);
}

HeavyBallForm amsgrad_to_hb_equivalent(double eta_k, double eta_km1, double beta,
                                       const Weights& a_k, const Weights& a_km1) {
    if (!(eta_k > 0.0) || !(eta_km1 > 0.0)) {
        throw std::invalid_argument("step-sizes must be positive");
    }
    require_same_dim(a_k, a_km1, "amsgrad_to_hb_equivalent");
    HeavyBallForm form;
    form.gradient_scale = eta_k * (1.0 - beta);
    form.momentum_diagonal = (beta * (eta_k / eta_km1)) * a_km1.cwiseQuotient(a_k);
    return form;
}

}  // namespace asls
