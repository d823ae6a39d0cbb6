#include "asls/step_size.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace asls {

namespace {

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

StepSizeOutcome backtrack(const LineSearchConfig& cfg, const FiniteSumObjective& obj,
                          BatchView batch, const Weights& w, const Weights& direction,
                          double decrease, double batch_loss, double eta_start) {
    require(eta_start > 0.0 && std::isfinite(eta_start), "line-search start must be positive");
    StepSizeOutcome out;
    out.eta_start = eta_start;
    out.eta_bound = eta_start;
    double eta = eta_start;
    for (int j = 0;; ++j) {
        if (sufficient_decrease(obj, batch, w, direction, decrease, batch_loss, cfg.c, eta)) {
            out.eta = eta;
            out.backtracks = j;
            return out;
        }
        if (j == cfg.max_backtracks) {
            out.eta = eta;
            out.backtracks = j;
            out.warning = true;
            return out;
        }
        eta *= cfg.backtrack_factor;
    }
}

StepSizeOutcome polyak(const SpsConfig& cfg, const FiniteSumObjective& obj, BatchView batch,
                       double norm_sq, double batch_loss, std::optional<double> eta_prev) {
    cfg.validate();
    const double f_star = obj.batch_f_star(batch);
    double gap = batch_loss - f_star;
    if (gap < 0.0) {
        // Tolerate rounding in the loss evaluation; anything larger means f* is wrong.
        if (gap < -1e-12 * std::max(1.0, std::abs(f_star))) {
            throw std::domain_error("SPS gap f_B(w) - f_B* = " + std::to_string(gap) +
                                    " is negative; check the f* source");
        }
        gap = 0.0;
    }
    StepSizeOutcome out;
    out.eta_bound = sps_bound(cfg, eta_prev);
    out.eta_start = out.eta_bound;
    const double denom = cfg.c * norm_sq;
    if (denom == 0.0) {
        out.eta = out.eta_bound;
        return out;
    }
    if (gap == 0.0) {
        // No progress is possible from a zero gap; keep a positive step and flag it.
        out.eta = out.eta_bound;
        out.warning = true;
        return out;
    }
    out.eta = std::min(gap / denom, out.eta_bound);
    return out;
}

}  // namespace

void LineSearchConfig::validate() const {
    require(c > 0.0 && c < 1.0, "line-search c must lie in (0, 1)");
    require(eta_max > 0.0 && std::isfinite(eta_max), "line-search eta_max must be positive");
    require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
            "backtrack factor must lie in (0, 1)");
    require(max_backtracks > 0, "max_backtracks must be positive");
    require(reset_option >= 0 && reset_option <= 2, "reset option must be 0, 1 or 2");
    require(reset_growth > 1.0 && std::isfinite(reset_growth), "reset growth must exceed 1");
}

void SpsConfig::validate() const {
    require(c > 0.0 && std::isfinite(c), "SPS c must be positive");
    require(eta_max > 0.0 && std::isfinite(eta_max), "SPS eta_max must be positive");
    require(!smoothing_tau || (*smoothing_tau >= 1.0 && std::isfinite(*smoothing_tau)),
            "SPS smoothing tau must be >= 1");
}

bool sufficient_decrease(const FiniteSumObjective& obj, BatchView batch, const Weights& w,
                         const Weights& direction, double decrease, double batch_loss, double c,
                         double eta) {
    const Weights trial = w - eta * direction;
    const double trial_loss = obj.batch_value(batch, trial);
    return trial_loss <= batch_loss - c * eta * decrease;
}

StepSizeOutcome lipschitz_search(const LineSearchConfig& cfg, const FiniteSumObjective& obj,
                                 BatchView batch, const Weights& w, const Weights& g,
                                 double batch_loss, double eta_start) {
    cfg.validate();
    require_same_dim(w, g, "lipschitz_search");
    return backtrack(cfg, obj, batch, w, g, sum_sq(g), batch_loss, eta_start);
}

StepSizeOutcome armijo_search(const LineSearchConfig& cfg, const FiniteSumObjective& obj,
                              BatchView batch, const Weights& w, const Weights& g,
                              const Preconditioner& precond, double batch_loss,
                              double eta_start) {
    cfg.validate();
    require_same_dim(w, g, "armijo_search");
    const Weights direction = precond.apply_inverse(g);
    return backtrack(cfg, obj, batch, w, direction, precond.norm_sq(g), batch_loss, eta_start);
}

double reset_start(const LineSearchConfig& cfg, double eta_prev, Index k, Index batch_size,
                   Index n) {
    if (k == 0) {
        return cfg.eta_max;
    }
    require(eta_prev > 0.0, "reset_start needs eta_prev > 0 after the first iteration");
    if (cfg.conservative) {
        return std::min(eta_prev, cfg.eta_max);
    }
    switch (cfg.reset_option) {
        case 0:
            return std::min(eta_prev, cfg.eta_max);
        case 1: {
            require(n > 0, "reset_start needs n > 0");
            const double ratio = static_cast<double>(batch_size) / static_cast<double>(n);
            return std::min(eta_prev * std::pow(cfg.reset_growth, ratio), cfg.eta_max);
        }
        default:
            return cfg.eta_max;
    }
}

double sps_bound(const SpsConfig& cfg, std::optional<double> eta_prev) {
    double bound = cfg.eta_max;
    if (eta_prev) {
        if (cfg.smoothing_tau) {
            bound = std::min(bound, *cfg.smoothing_tau * *eta_prev);
        }
        if (cfg.conservative) {
            bound = std::min(bound, *eta_prev);
        }
    }
    return bound;
}

StepSizeOutcome sps_step(const SpsConfig& cfg, const FiniteSumObjective& obj, BatchView batch,
                         const Weights& g, double batch_loss, std::optional<double> eta_prev) {
    return polyak(cfg, obj, batch, sum_sq(g), batch_loss, eta_prev);
}

StepSizeOutcome armijo_sps_step(const SpsConfig& cfg, const FiniteSumObjective& obj,
                                BatchView batch, const Weights& g,
                                const Preconditioner& precond, double batch_loss,
                                std::optional<double> eta_prev) {
    return polyak(cfg, obj, batch, precond.norm_sq(g), batch_loss, eta_prev);
}

std::string_view to_string(Theorem theorem) noexcept {
    switch (theorem) {
        case Theorem::adagrad_constant: return "adagrad_constant";
        case Theorem::amsgrad_constant: return "amsgrad_constant";
        case Theorem::amsgrad_constant_momentum: return "amsgrad_constant_momentum";
        case Theorem::amsgrad_sps_momentum: return "amsgrad_sps_momentum";
    }
    return "unknown";
}

Theorem theorem_from_string(std::string_view name) {
    for (auto t : {Theorem::adagrad_constant, Theorem::amsgrad_constant,
                   Theorem::amsgrad_constant_momentum, Theorem::amsgrad_sps_momentum}) {
        if (to_string(t) == name) {
            return t;
        }
    }
    throw std::invalid_argument("unknown theorem '" + std::string(name) + "'");
}

double theoretical_constant(Theorem theorem, double l_max, double a_min, double beta) {
    require(l_max > 0.0, "L_max must be positive");
    require(a_min > 0.0, "a_min must be positive");
    require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
    switch (theorem) {
        case Theorem::amsgrad_constant:
            return a_min / (2.0 * l_max);
        case Theorem::amsgrad_constant_momentum:
            return (1.0 - beta) / (1.0 + beta) * a_min / (2.0 * l_max);
        default:
            throw std::invalid_argument(std::string(to_string(theorem)) +
                                        " does not prescribe a constant step-size");
    }
}

double theoretical_sps_c(double beta) {
    require(beta >= 0.0 && beta < 1.0, "beta must lie in [0, 1)");
    return (1.0 + beta) / (1.0 - beta);
}

std::string_view to_string(StepSizeKind kind) noexcept {
    switch (kind) {
        case StepSizeKind::constant: return "constant";
        case StepSizeKind::lipschitz_ls: return "lipschitz_ls";
        case StepSizeKind::armijo_ls: return "armijo_ls";
        case StepSizeKind::sps: return "sps";
        case StepSizeKind::armijo_sps: return "armijo_sps";
        case StepSizeKind::theory: return "theory";
    }
    return "unknown";
}

StepSizeKind step_size_kind_from_string(std::string_view name) {
    for (auto k : {StepSizeKind::constant, StepSizeKind::lipschitz_ls, StepSizeKind::armijo_ls,
                   StepSizeKind::sps, StepSizeKind::armijo_sps, StepSizeKind::theory}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown step-size kind '" + std::string(name) + "'");
}

void StepSizeConfig::validate() const {
    switch (kind) {
        case StepSizeKind::constant:
            require(constant_eta > 0.0 && std::isfinite(constant_eta),
                    "constant step-size must be positive");
            break;
        case StepSizeKind::lipschitz_ls:
        case StepSizeKind::armijo_ls:
            line_search.validate();
            break;
        case StepSizeKind::sps:
        case StepSizeKind::armijo_sps:
            sps.validate();
            break;
        case StepSizeKind::theory:
            require(theory.l_max > 0.0, "theory step needs L_max > 0");
            require(theory.beta >= 0.0 && theory.beta < 1.0, "theory beta must lie in [0, 1)");
            require(!theory.a_min || *theory.a_min > 0.0, "theory a_min must be positive");
            break;
    }
}

bool StepSizeConfig::conservative() const noexcept {
    switch (kind) {
        case StepSizeKind::lipschitz_ls:
        case StepSizeKind::armijo_ls:
            return line_search.conservative;
        case StepSizeKind::sps:
        case StepSizeKind::armijo_sps:
            return sps.conservative;
        default:
            return false;
    }
}

double StepSizeConfig::eta_max() const noexcept {
    switch (kind) {
        case StepSizeKind::constant:
            return constant_eta;
        case StepSizeKind::lipschitz_ls:
        case StepSizeKind::armijo_ls:
            return line_search.eta_max;
        case StepSizeKind::sps:
        case StepSizeKind::armijo_sps:
            return sps.eta_max;
        case StepSizeKind::theory:
            return std::numeric_limits<double>::infinity();
    }
    return std::numeric_limits<double>::infinity();
}

StepSizeController::StepSizeController(StepSizeConfig config) : config_(std::move(config)) {
    config_.validate();
}

double StepSizeController::initial_eta() const noexcept {
    switch (config_.kind) {
        case StepSizeKind::constant:
            return config_.constant_eta;
        case StepSizeKind::theory:
            return theory_eta_.value_or(1.0);
        default:
            return config_.eta_max();
    }
}

StepSizeOutcome StepSizeController::next(const StepQuery& q) {
    const std::optional<double> prev =
        q.k == 0 ? std::nullopt : std::optional<double>(q.eta_prev);
    switch (config_.kind) {
        case StepSizeKind::constant: {
            const double eta = config_.constant_eta;
            return {eta, 0, false, eta, eta};
        }
        case StepSizeKind::theory: {
            if (!theory_eta_) {
                const double a_min = config_.theory.a_min.value_or(q.precond.min_diagonal());
                theory_eta_ = theoretical_constant(config_.theory.theorem, config_.theory.l_max,
                                                   a_min, config_.theory.beta);
            }
            return {*theory_eta_, 0, false, *theory_eta_, *theory_eta_};
        }
        case StepSizeKind::lipschitz_ls: {
            const auto& ls = config_.line_search;
            const double start =
                reset_start(ls, q.eta_prev, q.k, q.batch.size(), q.obj.size());
            return lipschitz_search(ls, q.obj, q.batch, q.w, q.g, q.batch_loss, start);
        }
        case StepSizeKind::armijo_ls: {
            const auto& ls = config_.line_search;
            const double start =
                reset_start(ls, q.eta_prev, q.k, q.batch.size(), q.obj.size());
            return armijo_search(ls, q.obj, q.batch, q.w, q.g, q.precond, q.batch_loss, start);
        }
        case StepSizeKind::sps:
            return sps_step(config_.sps, q.obj, q.batch, q.g, q.batch_loss, prev);
        case StepSizeKind::armijo_sps:
            return armijo_sps_step(config_.sps, q.obj, q.batch, q.g, q.precond, q.batch_loss,
                                   prev);
    }
    throw std::logic_error("unhandled step-size kind");
}

}  // namespace asls
