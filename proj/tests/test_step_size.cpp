#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "asls/problems.hpp"
#include "asls/step_size.hpp"

using namespace asls;

namespace {

// f(w) = L/2 (w - center)^2 in one dimension.
QuadraticObjective quad1(double L, double center = 0.0) {
    return QuadraticObjective(Eigen::MatrixXd::Constant(1, 1, L),
                              Eigen::MatrixXd::Constant(1, 1, center));
}

// Same loss with an inflated component minimum, so the SPS gap is negative.
class WrongFStar final : public FiniteSumObjective {
public:
    [[nodiscard]] Index size() const override { return 1; }
    [[nodiscard]] Index dim() const override { return 1; }
    [[nodiscard]] double value(Index, const Weights& w) const override { return 0.5 * w[0] * w[0]; }
    void add_grad(Index, const Weights& w, double scale, Weights& out) const override {
        out[0] += scale * w[0];
    }
    [[nodiscard]] double f_star(Index) const override { return 1.0; }
};

Preconditioner scalar_precond(double a) {
    PreconditionerOptions o;
    o.kind = PreconditionerKind::adagrad;
    o.epsilon = 0.0;
    Preconditioner p(o, 1);
    p.update(Weights::Constant(1, a));
    return p;
}

Preconditioner identity(Index d) {
    return Preconditioner(PreconditionerOptions{}, d);
}

const std::vector<Index> kBatch{0};

struct Probe {
    Weights w;
    Weights g;
    double loss;
};

Probe probe(const FiniteSumObjective& obj, double w0) {
    Weights w = Weights::Constant(1, w0);
    return {w, obj.batch_grad(kBatch, w), obj.batch_value(kBatch, w)};
}

LineSearchConfig ls_cfg(LineSearchMode mode) {
    LineSearchConfig c;
    c.mode = mode;
    c.c = 0.5;
    c.backtrack_factor = 0.5;
    return c;
}

}  // namespace

TEST_CASE("lipschitz search on a quadratic stops at the first candidate below 1/L") {
    const auto obj = quad1(2.0);
    const auto p = probe(obj, 1.0);
    const auto out = lipschitz_search(ls_cfg(LineSearchMode::lipschitz), obj, kBatch, p.w, p.g,
                                      p.loss, 10.0);
    CHECK(out.eta == 0.3125);
    CHECK(out.backtracks == 5);
    CHECK_FALSE(out.warning);
}

TEST_CASE("zero gradient accepts the start") {
    const auto obj = quad1(2.0);
    const auto p = probe(obj, 0.0);
    const auto ls = lipschitz_search(ls_cfg(LineSearchMode::lipschitz), obj, kBatch, p.w, p.g,
                                     p.loss, 10.0);
    CHECK(ls.eta == 10.0);
    CHECK(ls.backtracks == 0);
    const auto arm = armijo_search(ls_cfg(LineSearchMode::armijo), obj, kBatch, p.w, p.g,
                                   scalar_precond(4.0), p.loss, 10.0);
    CHECK(arm.eta == 10.0);
    CHECK(arm.backtracks == 0);
}

TEST_CASE("armijo search with scalar preconditioner") {
    const auto obj = quad1(2.0);
    const auto p = probe(obj, 1.0);
    const auto out = armijo_search(ls_cfg(LineSearchMode::armijo), obj, kBatch, p.w, p.g,
                                   scalar_precond(4.0), p.loss, 10.0);
    CHECK(out.eta == 1.25);
    CHECK(out.backtracks == 3);
}

TEST_CASE("armijo search with identity reproduces the lipschitz search bitwise") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Eigen::MatrixXd x(30, 5);
    Eigen::VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 5; ++j) x(i, j) = u(rng);
        y[i] = u(rng);
    }
    const LeastSquaresObjective obj(x, y);
    const std::vector<Index> batch{1, 4, 4, 17, 29};
    for (int t = 0; t < 20; ++t) {
        Weights w(5);
        for (int j = 0; j < 5; ++j) w[j] = 3.0 * u(rng);
        const Weights g = obj.batch_grad(batch, w);
        const double loss = obj.batch_value(batch, w);
        const auto a = lipschitz_search(ls_cfg(LineSearchMode::lipschitz), obj, batch, w, g, loss, 7.0);
        const auto b = armijo_search(ls_cfg(LineSearchMode::armijo), obj, batch, w, g, identity(5), loss, 7.0);
        CHECK(a.eta == b.eta);
        CHECK(a.backtracks == b.backtracks);
    }
}

TEST_CASE("exhausted backtracking returns the smallest candidate with a warning") {
    // Ascent direction: no candidate satisfies the decrease condition.
    const auto obj = quad1(2.0);
    auto p = probe(obj, 1.0);
    p.g = -p.g;
    auto cfg = ls_cfg(LineSearchMode::lipschitz);
    cfg.max_backtracks = 4;
    const auto out = lipschitz_search(cfg, obj, kBatch, p.w, p.g, p.loss, 1.0);
    CHECK(out.warning);
    CHECK(out.backtracks == 4);
    CHECK(out.eta == 1.0 / 16.0);
}

TEST_CASE("line-search config validation") {
    auto cfg = ls_cfg(LineSearchMode::armijo);
    cfg.c = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.c = 0.5;
    cfg.backtrack_factor = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.backtrack_factor = 0.5;
    cfg.reset_option = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("reset_start") {
    LineSearchConfig cfg;
    cfg.eta_max = 10.0;
    cfg.reset_growth = 2.0;
    for (int opt : {0, 1, 2}) {
        cfg.reset_option = opt;
        CHECK(reset_start(cfg, 0.5, 0, 128, 1280) == 10.0);
    }
    cfg.reset_option = 1;
    CHECK(reset_start(cfg, 0.5, 3, 128, 1280) == doctest::Approx(0.535887).epsilon(1e-6));
    CHECK(reset_start(cfg, 0.5, 3, 128, 1280) == 0.5 * std::pow(2.0, 0.1));
    CHECK(reset_start(cfg, 9.9, 3, 1280, 1280) == 10.0);
    cfg.reset_option = 0;
    CHECK(reset_start(cfg, 0.3, 3, 128, 1280) == 0.3);
    cfg.reset_option = 2;
    CHECK(reset_start(cfg, 0.3, 3, 128, 1280) == 10.0);
    cfg.reset_option = 1;
    cfg.conservative = true;
    CHECK(reset_start(cfg, 0.3, 3, 128, 1280) == 0.3);
}

TEST_CASE("SPS on a quadratic gives 1/(2cL)") {
    const auto obj = quad1(4.0);
    SpsConfig cfg;
    cfg.c = 0.5;
    cfg.eta_max = 10.0;
    for (double w0 : {-3.0, 0.1, 2.5}) {
        const auto p = probe(obj, w0);
        CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss).eta == doctest::Approx(0.25).epsilon(1e-12));
    }
}

TEST_CASE("SPS is clamped at eta_max") {
    const auto obj = quad1(0.005);  // 1/(2cL) = 100
    SpsConfig cfg;
    cfg.c = 1.0;
    cfg.eta_max = 1.0;
    const auto p = probe(obj, 1.0);
    CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss).eta == 1.0);
}

TEST_CASE("SPS smoothing caps growth at tau times the previous step") {
    const auto obj = quad1(0.2);  // unclamped step 5
    SpsConfig cfg;
    cfg.c = 0.5;
    cfg.eta_max = 10.0;
    cfg.smoothing_tau = std::pow(2.0, 0.1);
    const auto p = probe(obj, 1.0);
    CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss).eta == doctest::Approx(5.0).epsilon(1e-12));
    const auto out = sps_step(cfg, obj, kBatch, p.g, p.loss, 0.1);
    CHECK(out.eta == doctest::Approx(0.107177).epsilon(1e-6));
    CHECK(out.eta_bound == 0.1 * std::pow(2.0, 0.1));
}

TEST_CASE("conservative SPS never exceeds the previous step") {
    const auto obj = quad1(0.2);
    SpsConfig cfg;
    cfg.conservative = true;
    const auto p = probe(obj, 1.0);
    CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss, 0.3).eta == 0.3);
}

TEST_CASE("armijo SPS with scalar preconditioner gives a/(2cL)") {
    const auto obj = quad1(3.0);
    SpsConfig cfg;
    cfg.c = 0.5;
    const auto p = probe(obj, 0.7);
    const auto out = armijo_sps_step(cfg, obj, kBatch, p.g, scalar_precond(3.0), p.loss);
    CHECK(out.eta == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("armijo SPS with identity equals SPS bitwise") {
    const auto obj = quad1(1.7, 0.4);
    SpsConfig cfg;
    cfg.eta_max = 100.0;
    for (double w0 : {-1.3, 0.9, 5.0}) {
        const auto p = probe(obj, w0);
        CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss).eta ==
              armijo_sps_step(cfg, obj, kBatch, p.g, identity(1), p.loss).eta);
    }
}

TEST_CASE("SPS at the minimizer returns the bound") {
    const auto obj = quad1(3.0, 0.5);
    SpsConfig cfg;
    cfg.eta_max = 2.0;
    const auto p = probe(obj, 0.5);
    CHECK(sps_step(cfg, obj, kBatch, p.g, p.loss).eta == 2.0);
    CHECK(armijo_sps_step(cfg, obj, kBatch, p.g, scalar_precond(2.0), p.loss).eta == 2.0);
}

TEST_CASE("SPS rejects a negative gap") {
    const WrongFStar obj;
    const auto p = probe(obj, 0.5);
    CHECK_THROWS_AS((void)sps_step(SpsConfig{}, obj, kBatch, p.g, p.loss), std::domain_error);
}

TEST_CASE("theoretical constants") {
    CHECK(theoretical_constant(Theorem::amsgrad_constant, 2.0, 1.0, 0.0) == 0.25);
    CHECK(theoretical_constant(Theorem::amsgrad_constant_momentum, 2.0, 1.0, 0.0) ==
          theoretical_constant(Theorem::amsgrad_constant, 2.0, 1.0, 0.0));
    CHECK(theoretical_constant(Theorem::amsgrad_constant_momentum, 1.0, 1.0, 0.9) ==
          doctest::Approx(0.0263158).epsilon(1e-6));
    CHECK(theoretical_sps_c(0.0) == 1.0);
    CHECK(theoretical_sps_c(0.5) == doctest::Approx(3.0));
    CHECK_THROWS_AS((void)theoretical_constant(Theorem::amsgrad_constant, 0.0, 1.0, 0.0),
                    std::invalid_argument);
}

TEST_CASE("theory controller fixes the step from the first preconditioner") {
    StepSizeConfig cfg;
    cfg.kind = StepSizeKind::theory;
    cfg.theory = {Theorem::amsgrad_constant, 2.0, 0.0, std::nullopt};
    StepSizeController ctrl(cfg);
    const auto obj = quad1(2.0);
    const auto p = probe(obj, 1.0);
    auto pre = scalar_precond(3.0);
    const auto first = ctrl.next({obj, kBatch, p.w, p.g, p.loss, pre, 0, 1.0});
    CHECK(first.eta == 0.75);
    auto later = scalar_precond(100.0);
    CHECK(ctrl.next({obj, kBatch, p.w, p.g, p.loss, later, 5, 0.75}).eta == 0.75);
    REQUIRE(ctrl.fixed_theory_eta());
    CHECK(*ctrl.fixed_theory_eta() == 0.75);
}

TEST_CASE("step-size kinds round-trip through names") {
    for (auto k : {StepSizeKind::constant, StepSizeKind::lipschitz_ls, StepSizeKind::armijo_ls,
                   StepSizeKind::sps, StepSizeKind::armijo_sps, StepSizeKind::theory}) {
        CHECK(step_size_kind_from_string(to_string(k)) == k);
    }
    for (auto t : {Theorem::adagrad_constant, Theorem::amsgrad_constant,
                   Theorem::amsgrad_constant_momentum, Theorem::amsgrad_sps_momentum}) {
        CHECK(theorem_from_string(to_string(t)) == t);
    }
    CHECK_THROWS_AS((void)step_size_kind_from_string("wolfe"), std::invalid_argument);
}
