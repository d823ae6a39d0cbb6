#include "asls/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace asls {

std::string_view to_string(OptimizerKind kind) noexcept {
    switch (kind) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::adagrad: return "adagrad";
        case OptimizerKind::rmsprop: return "rmsprop";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::amsgrad: return "amsgrad";
    }
    return "unknown";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
    for (auto k : {OptimizerKind::sgd, OptimizerKind::adagrad, OptimizerKind::rmsprop,
                   OptimizerKind::adam, OptimizerKind::amsgrad}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw std::invalid_argument("unknown optimizer '" + std::string(name) + "'");
}

PreconditionerKind preconditioner_for(OptimizerKind kind) noexcept {
    switch (kind) {
        case OptimizerKind::sgd: return PreconditionerKind::identity;
        case OptimizerKind::adagrad: return PreconditionerKind::adagrad;
        case OptimizerKind::rmsprop: return PreconditionerKind::rmsprop;
        case OptimizerKind::adam: return PreconditionerKind::adam;
        case OptimizerKind::amsgrad: return PreconditionerKind::amsgrad;
    }
    return PreconditionerKind::identity;
}

PreconditionerOptions RunConfig::preconditioner_options() const {
    PreconditionerOptions opts;
    opts.kind = preconditioner_for(optimizer);
    opts.beta2 = beta2;
    opts.epsilon = epsilon;
    opts.bias_correction = bias_correction;
    opts.clamp = clamp;
    return opts;
}

void RunConfig::validate(Index n) const {
    if (batch_size == 0 || batch_size > n) {
        throw std::invalid_argument("batch size must lie in [1, n]");
    }
    if (epochs <= 0 && !max_steps) {
        throw std::invalid_argument("epochs must be positive");
    }
    if (max_steps && *max_steps == 0) {
        throw std::invalid_argument("max_steps must be positive");
    }
    preconditioner_options().validate();
    momentum.validate();
    step_size.validate();
}

OptimizerState::OptimizerState(Weights w0, double eta_init, std::uint64_t seed)
    : w(std::move(w0)),
      m(Weights::Zero(w.size())),
      w_prev(w),
      eta_prev(eta_init),
      rng(seed) {
    if (!(eta_init > 0.0)) {
        throw std::invalid_argument("initial step-size must be positive");
    }
    if (!all_finite(w)) {
        throw NumericalError("initial iterate is not finite");
    }
}

StepRecord step(OptimizerState& state, const FiniteSumObjective& obj, BatchView batch,
                Preconditioner& precond, StepSizeController& controller,
                const MomentumConfig& momentum) {
    if (static_cast<Index>(state.w.size()) != obj.dim() || precond.dim() != obj.dim()) {
        throw std::invalid_argument("optimizer state, preconditioner and objective disagree on dimension");
    }
    const double loss = obj.batch_value(batch, state.w);
    const Weights g = obj.batch_grad(batch, state.w);
    if (const Index j = first_non_finite(g); j != obj.dim()) {
        throw NumericalError("non-finite gradient at step " + std::to_string(state.k) +
                             ", coordinate " + std::to_string(j));
    }
    if (!std::isfinite(loss)) {
        throw NumericalError("non-finite batch loss at step " + std::to_string(state.k));
    }

    const Weights diag_before = precond.diagonal();
    precond.update(g);

    const StepSizeOutcome outcome =
        controller.next(StepQuery{obj, batch, state.w, g, loss, precond, state.k, state.eta_prev});
    if (!(outcome.eta > 0.0) || !std::isfinite(outcome.eta)) {
        throw NumericalError("step-size " + std::to_string(outcome.eta) + " at step " +
                             std::to_string(state.k) + " is not positive and finite");
    }

    Weights next;
    switch (momentum.kind) {
        case MomentumKind::none:
        case MomentumKind::moving_average: {
            const double beta = momentum.kind == MomentumKind::none ? 0.0 : momentum.beta;
            state.m = moving_average(state.m, g, beta);
            next = state.w - outcome.eta * precond.apply_inverse(state.m);
            break;
        }
        case MomentumKind::heavy_ball:
            next = heavy_ball_update(state.w, state.w_prev, outcome.eta, precond.apply_inverse(g),
                                     momentum.gamma);
            break;
    }
    if (const Index j = first_non_finite(next); j != obj.dim()) {
        throw NumericalError("iterate became non-finite at step " + std::to_string(state.k) +
                             ", coordinate " + std::to_string(j));
    }

    StepRecord rec;
    rec.k = state.k;
    rec.batch_loss = loss;
    rec.eta = outcome.eta;
    rec.eta_start = outcome.eta_start;
    rec.eta_bound = outcome.eta_bound;
    rec.grad_norm_sq = sum_sq(g);
    rec.precond_norm_sq = precond.norm_sq(g);
    rec.backtracks = outcome.backtracks;
    rec.warning = outcome.warning;
    rec.a_min = precond.min_diagonal();
    rec.a_max = precond.max_diagonal();
    rec.trace_a = precond.trace();
    rec.min_delta_a = state.k == 0 ? std::numeric_limits<double>::infinity()
                                   : (precond.diagonal() - diag_before).minCoeff();

    state.w_prev = std::move(state.w);
    state.w = std::move(next);
    state.eta_prev = outcome.eta;
    ++state.k;
    return rec;
}

std::vector<Index> sample_batch(std::mt19937_64& rng, Index n, Index b) {
    if (n == 0) {
        throw std::invalid_argument("cannot sample from an empty objective");
    }
    std::uniform_int_distribution<Index> pick(0, n - 1);
    std::vector<Index> batch(b);
    for (auto& i : batch) {
        i = pick(rng);
    }
    return batch;
}

Weights uniform_average(std::span<const Weights> iterates) {
    if (iterates.empty()) {
        throw std::invalid_argument("uniform_average of an empty list");
    }
    Weights sum = Weights::Zero(iterates.front().size());
    for (const auto& w : iterates) {
        require_same_dim(sum, w, "uniform_average");
        sum += w;
    }
    return sum / static_cast<double>(iterates.size());
}

Index steps_per_epoch(Index n, Index batch_size) {
    return (n + batch_size - 1) / batch_size;
}

RunResult run(const FiniteSumObjective& obj, const RunConfig& config, std::optional<Weights> w0) {
    const Index n = obj.size();
    const Index d = obj.dim();
    config.validate(n);

    Weights start = w0 ? std::move(*w0) : Weights::Zero(static_cast<Eigen::Index>(d));
    if (static_cast<Index>(start.size()) != d) {
        throw std::invalid_argument("initial iterate has the wrong dimension");
    }

    Preconditioner precond(config.preconditioner_options(), d);
    StepSizeController controller(config.step_size);
    OptimizerState state(std::move(start), controller.initial_eta(), config.seed);

    RunResult result;
    auto& traj = result.trajectory;
    traj.optimizer = config.optimizer;
    traj.preconditioner = precond.options();
    traj.step_size = config.step_size;
    traj.momentum = config.momentum;
    traj.dim = d;
    traj.n = n;
    traj.batch_size = config.batch_size;
    traj.seed = config.seed;
    traj.l_max = obj.smoothness_bound();

    const Index per_epoch = steps_per_epoch(n, config.batch_size);
    const Index total = config.max_steps.value_or(static_cast<Index>(config.epochs) * per_epoch);
    traj.steps.reserve(total);

    std::vector<Index> checkpoints = config.average_checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    auto next_checkpoint = checkpoints.begin();

    if (config.record_iterates) {
        result.iterates.reserve(total + 1);
        result.iterates.push_back(state.w);
    }

    Weights running_sum = Weights::Zero(static_cast<Eigen::Index>(d));
    for (Index t = 0; t < total; ++t) {
        const auto batch = sample_batch(state.rng, n, config.batch_size);
        StepRecord rec = step(state, obj, batch, precond, controller, config.momentum);
        rec.epoch = static_cast<int>(t / per_epoch) + 1;
        if (config.record_diagonals) {
            const auto& a = precond.diagonal();
            rec.diagonal.assign(a.data(), a.data() + a.size());
        }
        traj.steps.push_back(std::move(rec));
        if (config.record_iterates) {
            result.iterates.push_back(state.w);
        }

        running_sum += state.w;
        const Index taken = t + 1;
        while (next_checkpoint != checkpoints.end() && *next_checkpoint <= taken) {
            if (*next_checkpoint == taken) {
                result.checkpoint_averages.emplace_back(taken,
                                                        running_sum / static_cast<double>(taken));
            }
            ++next_checkpoint;
        }
        if (taken % per_epoch == 0 || taken == total) {
            traj.epochs.push_back({traj.steps.back().epoch, t, obj.full_value(state.w)});
        }
    }

    result.final_weights = state.w;
    result.averaged_weights = config.averaging == Averaging::uniform
                                  ? Weights(running_sum / static_cast<double>(total))
                                  : state.w;
    return result;
}

}  // namespace asls
