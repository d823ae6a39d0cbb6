#include "asls/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace asls {

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

bool within(double lhs, double rhs) {
    return lhs <= rhs + 1e-12 * (std::abs(lhs) + std::abs(rhs));
}

}  // namespace

void TheoryInputs::validate() const {
    if (!(l_max > 0.0) || !(a_min > 0.0) || !(a_max >= a_min) || !(radius >= 0.0) ||
        dim == 0 || !(beta >= 0.0 && beta < 1.0) || !(sigma_sq >= 0.0)) {
        throw std::invalid_argument(
            "theory inputs need L_max > 0, 0 < a_min <= a_max, D >= 0, d > 0, beta in [0,1), "
            "sigma^2 >= 0");
    }
}

double measure_radius(std::span<const Weights> iterates, const Weights& reference) {
    double best = 0.0;
    for (const auto& w : iterates) {
        require_same_dim(w, reference, "measure_radius");
        best = std::max(best, (w - reference).norm());
    }
    return best;
}

double estimate_sigma_sq(const FiniteSumObjective& obj, const Weights& w_star) {
    if (static_cast<Index>(w_star.size()) != obj.dim()) {
        throw std::invalid_argument("estimate_sigma_sq: w* has the wrong dimension");
    }
    double acc = 0.0;
    for (Index i = 0; i < obj.size(); ++i) {
        const double gap = obj.value(i, w_star) - obj.f_star(i);
        if (gap < -1e-9) {
            throw std::domain_error("component " + std::to_string(i) + " lies " +
                                    format_double(-gap) +
                                    " below its f*; wrong f* or wrong w*");
        }
        acc += std::max(gap, 0.0);
    }
    return acc / static_cast<double>(obj.size());
}

// ------------------------------------------------------------ step bounds

double StepBoundReport::violation_fraction() const noexcept {
    return steps == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(steps);
}

std::string StepBoundReport::to_text() const {
    std::ostringstream os;
    os << "check=step_bounds\n"
       << "rule=" << rule << '\n'
       << "steps=" << steps << '\n'
       << "violations=" << violations << '\n'
       << "violation_fraction=" << format_double(violation_fraction()) << '\n'
       << "vacuous=" << (vacuous ? "true" : "false") << '\n';
    if (first_violation) {
        os << "first_violation.step=" << first_violation->step << '\n'
           << "first_violation.eta=" << format_double(first_violation->eta) << '\n'
           << "first_violation.lower=" << format_double(first_violation->lower) << '\n'
           << "first_violation.upper=" << format_double(first_violation->upper) << '\n'
           << "first_violation.reason=" << first_violation->reason << '\n';
    }
    return os.str();
}

std::string StepBoundReport::to_json() const {
    nlohmann::json j = {{"check", "step_bounds"},
                        {"rule", rule},
                        {"steps", steps},
                        {"violations", violations},
                        {"violation_fraction", violation_fraction()},
                        {"vacuous", vacuous},
                        {"passed", passed()}};
    if (first_violation) {
        j["first_violation"] = {{"step", first_violation->step},
                                {"eta", first_violation->eta},
                                {"lower", first_violation->lower},
                                {"upper", first_violation->upper},
                                {"reason", first_violation->reason}};
    } else {
        j["first_violation"] = nullptr;
    }
    return j.dump(2);
}

StepBoundReport check_step_bounds(const TrajectoryRecord& traj, const TheoryInputs& theory) {
    return check_step_bounds(traj, theory, traj.step_size);
}

StepBoundReport check_step_bounds(const TrajectoryRecord& traj, const TheoryInputs& theory,
                                  const StepSizeConfig& ctrl) {
    if (!(theory.l_max > 0.0)) {
        throw std::invalid_argument("check_step_bounds needs L_max > 0");
    }
    const double l = theory.l_max;
    StepBoundReport report;
    report.rule = std::string(to_string(ctrl.kind));
    report.steps = traj.steps.size();
    report.vacuous = ctrl.kind == StepSizeKind::constant || ctrl.kind == StepSizeKind::theory;
    const bool conservative = ctrl.conservative();
    const double eta_max = ctrl.eta_max();

    for (Index idx = 0; idx < traj.steps.size(); ++idx) {
        const auto& s = traj.steps[idx];
        double lower = 0.0;
        double upper = 0.0;
        switch (ctrl.kind) {
            case StepSizeKind::constant:
            case StepSizeKind::theory:
                lower = s.eta_start;
                upper = s.eta_start;
                break;
            case StepSizeKind::lipschitz_ls:
            case StepSizeKind::armijo_ls: {
                const auto& ls = ctrl.line_search;
                const double a = ctrl.kind == StepSizeKind::armijo_ls ? s.a_min : 1.0;
                lower = ls.backtrack_factor * std::min(s.eta_start, 2.0 * a * (1.0 - ls.c) / l);
                upper = std::min(s.eta_start, eta_max);
                break;
            }
            case StepSizeKind::sps:
            case StepSizeKind::armijo_sps: {
                const double a = ctrl.kind == StepSizeKind::armijo_sps ? s.a_min : 1.0;
                // The ratio is evaluated in floating point; allow its rounding.
                lower = std::min(s.eta_bound, a / (2.0 * ctrl.sps.c * l)) * (1.0 - 1e-12);
                upper = std::min(s.eta_bound, eta_max);
                break;
            }
        }

        std::string reason;
        if (!(s.eta > 0.0)) {
            reason = "step-size is not positive";
        } else if (s.eta < lower) {
            reason = "below the guaranteed lower bound";
        } else if (s.eta > upper) {
            reason = "above the upper bound";
        } else if (conservative && idx > 0 && s.eta > traj.steps[idx - 1].eta) {
            reason = "conservative step-size increased";
            upper = traj.steps[idx - 1].eta;
        }
        if (!reason.empty()) {
            ++report.violations;
            if (!report.first_violation) {
                report.first_violation = BoundViolation{s.k, s.eta, lower, upper, reason};
            }
        }
    }
    return report;
}

// ------------------------------------------------------- preconditioner checks

std::optional<Index> first_preconditioner_decrease(const TrajectoryRecord& traj) {
    for (Index idx = 1; idx < traj.steps.size(); ++idx) {
        const auto& prev = traj.steps[idx - 1];
        const auto& cur = traj.steps[idx];
        if (!cur.diagonal.empty() && cur.diagonal.size() == prev.diagonal.size()) {
            for (Index j = 0; j < cur.diagonal.size(); ++j) {
                if (cur.diagonal[j] < prev.diagonal[j]) {
                    return cur.k;
                }
            }
        } else if (cur.min_delta_a < 0.0) {
            return cur.k;
        }
    }
    return std::nullopt;
}

bool check_amsgrad_monotone(const TrajectoryRecord& traj) {
    return !first_preconditioner_decrease(traj).has_value();
}

std::string AdagradLemmaReport::to_text() const {
    std::ostringstream os;
    os << "check=adagrad_lemmas\n"
       << "steps=" << steps << '\n'
       << "precond_norm_sum=" << format_double(precond_norm_sum) << '\n'
       << "twice_trace=" << format_double(twice_trace) << '\n'
       << "norm_sum_margin=" << format_double(norm_sum_margin()) << '\n'
       << "norm_sum_holds=" << (norm_sum_holds ? "true" : "false") << '\n'
       << "trace_without_eps=" << format_double(trace_without_eps) << '\n'
       << "trace_bound=" << format_double(trace_bound) << '\n'
       << "trace_margin=" << format_double(trace_margin()) << '\n'
       << "trace_holds=" << (trace_holds ? "true" : "false") << '\n';
    return os.str();
}

std::string AdagradLemmaReport::to_json() const {
    const nlohmann::json j = {{"check", "adagrad_lemmas"},
                              {"steps", steps},
                              {"precond_norm_sum", precond_norm_sum},
                              {"twice_trace", twice_trace},
                              {"norm_sum_margin", norm_sum_margin()},
                              {"norm_sum_holds", norm_sum_holds},
                              {"trace_without_eps", trace_without_eps},
                              {"trace_bound", trace_bound},
                              {"trace_margin", trace_margin()},
                              {"trace_holds", trace_holds},
                              {"passed", passed()}};
    return j.dump(2);
}

AdagradLemmaReport check_adagrad_lemmas(const TrajectoryRecord& traj) {
    if (traj.preconditioner.kind != PreconditionerKind::adagrad) {
        throw std::invalid_argument("check_adagrad_lemmas needs an AdaGrad trajectory, got " +
                                    std::string(to_string(traj.preconditioner.kind)));
    }
    if (traj.preconditioner.clamp) {
        throw std::invalid_argument("check_adagrad_lemmas does not apply to clamped preconditioners");
    }
    AdagradLemmaReport report;
    report.steps = traj.steps.size();
    double grad_sum = 0.0;
    for (const auto& s : traj.steps) {
        report.precond_norm_sum += s.precond_norm_sq;
        grad_sum += s.grad_norm_sq;
    }
    const double trace = traj.steps.empty() ? static_cast<double>(traj.dim) * traj.preconditioner.epsilon
                                            : traj.steps.back().trace_a;
    report.twice_trace = 2.0 * trace;
    report.trace_without_eps = trace - static_cast<double>(traj.dim) * traj.preconditioner.epsilon;
    report.trace_bound = std::sqrt(static_cast<double>(traj.dim) * grad_sum);
    report.norm_sum_holds = within(report.precond_norm_sum, report.twice_trace);
    report.trace_holds = within(report.trace_without_eps, report.trace_bound);
    return report;
}

// ------------------------------------------------------------ rate constants

double rate_constant(Theorem theorem, const TheoryInputs& in, double eta) {
    in.validate();
    const double d = static_cast<double>(in.dim);
    const double d2 = in.radius * in.radius;
    switch (theorem) {
        case Theorem::adagrad_constant: {
            if (!(eta > 0.0)) {
                throw std::invalid_argument("adagrad rate constant needs eta > 0");
            }
            const double inner = d2 / eta + 2.0 * eta;
            return 0.5 * inner * inner * d * in.l_max;
        }
        case Theorem::amsgrad_constant:
            return 2.0 * d2 * d * in.a_max * in.l_max / in.a_min;
        case Theorem::amsgrad_constant_momentum:
        case Theorem::amsgrad_sps_momentum: {
            const double ratio = (1.0 + in.beta) / (1.0 - in.beta);
            return ratio * ratio * 2.0 * in.l_max * d2 * d * in.kappa();
        }
    }
    throw std::logic_error("unhandled theorem");
}

double adagrad_bound(double alpha, double sigma_sq, double t) {
    if (!(t > 0.0) || alpha < 0.0 || sigma_sq < 0.0) {
        throw std::invalid_argument("adagrad_bound needs T > 0 and nonnegative constants");
    }
    return alpha / t + std::sqrt(alpha) * std::sqrt(sigma_sq) / std::sqrt(t);
}

double amsgrad_bound(double constant, double sigma_sq, double t) {
    if (!(t > 0.0) || constant < 0.0 || sigma_sq < 0.0) {
        throw std::invalid_argument("amsgrad_bound needs T > 0 and nonnegative constants");
    }
    return constant / t + sigma_sq;
}

// ---------------------------------------------------------------- rate fit

RateFit fit_rate(std::span<const double> horizons, std::span<const double> values) {
    if (horizons.size() != values.size()) {
        throw std::invalid_argument("fit_rate: horizon and value counts differ");
    }
    if (values.size() < 10) {
        throw std::invalid_argument("fit_rate needs at least 10 points");
    }
    const auto n = static_cast<double>(values.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0) || !(horizons[i] > 0.0)) {
            throw std::invalid_argument("fit_rate needs positive horizons and values");
        }
        sx += std::log(horizons[i]);
        sy += std::log(values[i]);
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double dx = std::log(horizons[i]) - mx;
        const double dy = std::log(values[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_rate needs at least two distinct horizons");
    }
    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy == 0.0 ? 1.0 : std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    return fit;
}

double quadratic_bound(double a, double b) {
    if (a < 0.0 || b < 0.0) {
        throw std::invalid_argument("quadratic_bound needs a, b >= 0");
    }
    return a + std::sqrt(a * b);
}

}  // namespace asls
