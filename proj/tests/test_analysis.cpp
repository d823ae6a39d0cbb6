#include <doctest.h>

#include <cmath>
#include <random>

#include "asls/analysis.hpp"
#include "asls/problems.hpp"
#include "oracles.hpp"

using namespace asls;

namespace {

class ShiftedQuadratic final : public FiniteSumObjective {
public:
    explicit ShiftedQuadratic(double f_star) : f_star_(f_star) {}
    [[nodiscard]] Index size() const override { return 1; }
    [[nodiscard]] Index dim() const override { return 1; }
    [[nodiscard]] double value(Index, const Weights& w) const override { return w[0] * w[0]; }
    void add_grad(Index, const Weights& w, double scale, Weights& out) const override {
        out[0] += 2.0 * scale * w[0];
    }
    [[nodiscard]] double f_star(Index) const override { return f_star_; }

private:
    double f_star_;
};

RunConfig logistic_run(OptimizerKind opt, StepSizeKind kind, std::uint64_t seed) {
    RunConfig c;
    c.optimizer = opt;
    c.batch_size = 10;
    c.epochs = 5;
    c.seed = seed;
    c.momentum = {opt == OptimizerKind::amsgrad ? MomentumKind::moving_average : MomentumKind::none,
                  opt == OptimizerKind::amsgrad ? 0.9 : 0.0, 0.0};
    c.step_size.kind = kind;
    c.step_size.constant_eta = 0.1;
    c.step_size.line_search.eta_max = 100.0;
    c.step_size.line_search.mode =
        kind == StepSizeKind::lipschitz_ls ? LineSearchMode::lipschitz : LineSearchMode::armijo;
    return c;
}

TheoryInputs theory_for(const TrajectoryRecord& t) {
    TheoryInputs in;
    in.l_max = *t.l_max;
    in.a_min = t.steps.front().a_min;
    for (const auto& s : t.steps) in.a_min = std::min(in.a_min, s.a_min);
    return in;
}

std::vector<double> horizons(int n) {
    std::vector<double> t;
    for (int i = 0; i < n; ++i) t.push_back(std::pow(10.0, 2.0 + 2.0 * i / (n - 1)));
    return t;
}

}  // namespace

TEST_CASE("sigma squared") {
    const MatrixFactorizationObjective mf(gen_matrix_factorization(10, 3));
    CHECK(estimate_sigma_sq(mf, *mf.problem().exact_factorization()) == 0.0);

    const ShiftedQuadratic one(0.25);
    CHECK(estimate_sigma_sq(one, Weights::Constant(1, 1.0)) == 0.75);
    CHECK(estimate_sigma_sq(ShiftedQuadratic(1e-13), Weights::Zero(1)) == 0.0);
    CHECK_THROWS_AS((void)estimate_sigma_sq(ShiftedQuadratic(1e-6), Weights::Zero(1)), std::domain_error);
}

TEST_CASE("measure_radius") {
    const std::vector<Weights> it{oracle::to_weights({0, 0}), oracle::to_weights({3, 4}),
                                  oracle::to_weights({1, 1})};
    CHECK(measure_radius(it, oracle::to_weights({0, 0})) == 5.0);
}

TEST_CASE("constant runs pass the bound check vacuously") {
    const LogisticObjective obj(gen_separable({200, 5, 0.1, 1}).data);
    const auto r = run(obj, logistic_run(OptimizerKind::sgd, StepSizeKind::constant, 0));
    const auto report = check_step_bounds(r.trajectory, theory_for(r.trajectory));
    CHECK(report.vacuous);
    CHECK(report.passed());
}

TEST_CASE("armijo and lipschitz searches respect their bounds on logistic regression") {
    const LogisticObjective obj(gen_separable({200, 5, 0.1, 2}).data);
    for (auto opt : {OptimizerKind::sgd, OptimizerKind::adagrad, OptimizerKind::amsgrad}) {
        for (auto kind : {StepSizeKind::armijo_ls, StepSizeKind::lipschitz_ls}) {
            const auto r = run(obj, logistic_run(opt, kind, 4));
            const auto report = check_step_bounds(r.trajectory, theory_for(r.trajectory));
            CAPTURE(report.to_text());
            CHECK(report.violations == 0);
            CHECK_FALSE(report.vacuous);
        }
    }
}

TEST_CASE("a corrupted step is flagged once") {
    const LogisticObjective obj(gen_separable({200, 5, 0.1, 2}).data);
    auto traj = run(obj, logistic_run(OptimizerKind::adagrad, StepSizeKind::armijo_ls, 1)).trajectory;
    traj.steps[7].eta = 2.0 * traj.step_size.eta_max();
    const auto report = check_step_bounds(traj, theory_for(traj));
    CHECK(report.violations == 1);
    REQUIRE(report.first_violation);
    CHECK(report.first_violation->step == 7);
    CHECK(report.to_text().find("violations=1") != std::string::npos);
    CHECK(report.to_json().find("\"violations\": 1") != std::string::npos);
}

TEST_CASE("conservative increase is a violation") {
    const LogisticObjective obj(gen_separable({200, 5, 0.1, 2}).data);
    auto cfg = logistic_run(OptimizerKind::sgd, StepSizeKind::armijo_ls, 3);
    cfg.step_size.line_search.conservative = true;
    auto traj = run(obj, cfg).trajectory;
    CHECK(check_step_bounds(traj, theory_for(traj)).passed());
    traj.steps[5].eta = traj.steps[4].eta * 1.5;
    traj.steps[5].eta_start = traj.steps[5].eta;
    CHECK(check_step_bounds(traj, theory_for(traj)).violations == 1);
}

TEST_CASE("amsgrad monotonicity") {
    const LogisticObjective obj(gen_separable({100, 4, 0.1, 5}).data);
    auto cfg = logistic_run(OptimizerKind::amsgrad, StepSizeKind::armijo_ls, 2);
    cfg.record_diagonals = true;
    const auto r = run(obj, cfg);
    CHECK(check_amsgrad_monotone(r.trajectory));

    TrajectoryRecord single;
    single.steps.resize(1);
    CHECK(check_amsgrad_monotone(single));

    // RMSProp forgets large gradients.
    PreconditionerOptions o;
    o.kind = PreconditionerKind::rmsprop;
    o.beta2 = 0.9;
    Preconditioner p(o, 1);
    TrajectoryRecord t;
    for (int k = 0; k < 20; ++k) {
        p.update(Weights::Constant(1, k < 10 ? 10.0 : 0.1));
        StepRecord s;
        s.k = static_cast<Index>(k);
        s.diagonal = {p.diagonal()[0]};
        t.steps.push_back(s);
    }
    CHECK_FALSE(check_amsgrad_monotone(t));
    CHECK(first_preconditioner_decrease(t) == Index{10});
}

TEST_CASE("adagrad lemmas by hand") {
    TrajectoryRecord t;
    t.preconditioner.kind = PreconditionerKind::adagrad;
    t.preconditioner.epsilon = 0.0;
    t.dim = 2;
    StepRecord s;
    s.grad_norm_sq = 25.0;
    s.precond_norm_sq = 9.0 / 3.0 + 16.0 / 4.0;
    s.trace_a = 7.0;
    t.steps.push_back(s);
    auto r = check_adagrad_lemmas(t);
    CHECK(r.precond_norm_sum == 7.0);
    CHECK(r.twice_trace == 14.0);
    CHECK(r.trace_without_eps == 7.0);
    CHECK(r.trace_bound == doctest::Approx(std::sqrt(50.0)));
    CHECK(r.passed());

    StepRecord zero = s;
    zero.grad_norm_sq = 0.0;
    zero.precond_norm_sq = 0.0;
    t.steps.push_back(zero);
    const auto r2 = check_adagrad_lemmas(t);
    CHECK(r2.precond_norm_sum == r.precond_norm_sum);
    CHECK(r2.trace_bound == r.trace_bound);

    t.preconditioner.kind = PreconditionerKind::adam;
    CHECK_THROWS_AS((void)check_adagrad_lemmas(t), std::invalid_argument);
}

TEST_CASE("adagrad lemmas hold on a long random run") {
    const LogisticObjective obj(gen_separable({500, 10, 0.1, 6}).data);
    auto cfg = logistic_run(OptimizerKind::adagrad, StepSizeKind::armijo_ls, 9);
    cfg.batch_size = 5;
    cfg.epochs = 10;
    const auto r = run(obj, cfg);
    REQUIRE(r.trajectory.steps.size() == 1000);
    const auto report = check_adagrad_lemmas(r.trajectory);
    CAPTURE(report.to_text());
    CHECK(report.passed());
    CHECK(report.norm_sum_margin() >= 0.0);
}

TEST_CASE("rate constants") {
    TheoryInputs in;
    in.radius = 1.0;
    in.dim = 2;
    in.l_max = 2.0;
    CHECK(rate_constant(Theorem::adagrad_constant, in, 1.0) == 18.0);

    in.a_min = 0.5;
    in.a_max = 2.0;
    in.beta = 0.0;
    CHECK(rate_constant(Theorem::amsgrad_constant_momentum, in) ==
          doctest::Approx(2.0 * in.l_max * in.radius * in.radius * 2.0 * in.kappa()));

    auto grows = [&](auto mutate, Theorem th) {
        TheoryInputs lo = in;
        TheoryInputs hi = in;
        mutate(hi);
        return rate_constant(th, hi, 0.7) > rate_constant(th, lo, 0.7);
    };
    for (auto th : {Theorem::adagrad_constant, Theorem::amsgrad_constant,
                    Theorem::amsgrad_constant_momentum}) {
        CHECK(grows([](TheoryInputs& x) { x.radius *= 1.5; }, th));
        CHECK(grows([](TheoryInputs& x) { x.dim += 3; }, th));
        CHECK(grows([](TheoryInputs& x) { x.l_max *= 2.0; }, th));
    }
    in.beta = 0.3;
    CHECK(grows([](TheoryInputs& x) { x.beta = 0.6; }, Theorem::amsgrad_constant_momentum));
    CHECK_THROWS_AS((void)rate_constant(Theorem::adagrad_constant, in, 0.0), std::invalid_argument);
}

TEST_CASE("bound curves") {
    CHECK(adagrad_bound(4.0, 0.0, 2.0) == 2.0);
    CHECK(amsgrad_bound(4.0, 0.5, 2.0) == 2.5);
    CHECK_THROWS_AS((void)amsgrad_bound(1.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("fit_rate recovers power laws") {
    const auto t = horizons(12);
    std::vector<double> inv(t.size()), inv_sqrt(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        inv[i] = 3.0 / t[i];
        inv_sqrt[i] = 3.0 / std::sqrt(t[i]);
    }
    const auto f = fit_rate(t, inv);
    CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-10));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-10));
    CHECK(fit_rate(t, inv_sqrt).slope == doctest::Approx(-0.5).epsilon(1e-10));

    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 1e-3);
    for (auto& v : inv) v *= 1.0 + noise(rng);
    const auto g = fit_rate(t, inv);
    CHECK(g.slope >= -1.05);
    CHECK(g.slope <= -0.95);
    CHECK(g.slope == doctest::Approx(oracle::loglog_slope(t, inv)).epsilon(1e-12));
}

TEST_CASE("fit_rate input checks") {
    const auto t = horizons(12);
    std::vector<double> v(12, 1.0);
    v[3] = 0.0;
    CHECK_THROWS_AS((void)fit_rate(t, v), std::invalid_argument);
    const auto few = horizons(5);
    CHECK_THROWS_AS((void)fit_rate(few, std::vector<double>(5, 1.0)), std::invalid_argument);
}

TEST_CASE("quadratic_bound") {
    CHECK(quadratic_bound(3.0, 0.0) == 3.0);
    CHECK(quadratic_bound(0.0, 5.0) == 0.0);
    CHECK(quadratic_bound(4.0, 9.0) == 10.0);
    const double root = (4.0 + std::sqrt(16.0 + 144.0)) / 2.0;
    CHECK(root == doctest::Approx(8.325).epsilon(1e-3));
    CHECK(root <= quadratic_bound(4.0, 9.0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        const double largest = (a + std::sqrt(a * a + 4.0 * a * b)) / 2.0;
        CHECK(largest <= quadratic_bound(a, b) * (1.0 + 1e-15));
    }
    CHECK_THROWS_AS((void)quadratic_bound(-1.0, 1.0), std::invalid_argument);
}
