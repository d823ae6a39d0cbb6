#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <vector>

#include "asls/asls.hpp"

using namespace asls;

namespace {

Weights random_vector(Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Weights w(static_cast<Eigen::Index>(d));
    for (auto& v : w) v = normal(rng);
    return w;
}

const LogisticObjective& logistic(Index d) {
    static std::map<Index, LogisticObjective> cache;
    auto it = cache.find(d);
    if (it == cache.end()) {
        it = cache.emplace(d, LogisticObjective(gen_separable({1000, d, 0.1, 0}).data)).first;
    }
    return it->second;
}

std::vector<Index> first_batch(Index b) {
    std::mt19937_64 rng(1);
    return sample_batch(rng, 1000, b);
}

void BM_PreconditionerUpdate(benchmark::State& state) {
    const Index d = state.range(0);
    PreconditionerOptions o;
    o.kind = static_cast<PreconditionerKind>(state.range(1));
    Preconditioner p(o, d);
    const Weights g = random_vector(d, 2);
    for (auto _ : state) {
        p.update(g);
        benchmark::DoNotOptimize(p.diagonal().data());
    }
}
BENCHMARK(BM_PreconditionerUpdate)
    ->ArgsProduct({{20, 1000, 100000},
                   {static_cast<long>(PreconditionerKind::adagrad),
                    static_cast<long>(PreconditionerKind::amsgrad)}});

void BM_LogisticBatchGrad(benchmark::State& state) {
    const auto& obj = logistic(state.range(0));
    const auto batch = first_batch(state.range(1));
    const Weights w = random_vector(obj.dim(), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(obj.batch_grad(batch, w));
    }
}
BENCHMARK(BM_LogisticBatchGrad)->ArgsProduct({{20, 200}, {10, 100, 1000}});

void BM_ArmijoSearch(benchmark::State& state) {
    const auto& obj = logistic(20);
    const auto batch = first_batch(100);
    const Weights w = random_vector(obj.dim(), 4);
    const Weights g = obj.batch_grad(batch, w);
    const double loss = obj.batch_value(batch, w);
    PreconditionerOptions o;
    o.kind = PreconditionerKind::adagrad;
    Preconditioner p(o, obj.dim());
    p.update(g);
    LineSearchConfig cfg;
    cfg.mode = LineSearchMode::armijo;
    const double start = static_cast<double>(state.range(0));
    for (auto _ : state) {
        const auto out = armijo_search(cfg, obj, batch, w, g, p, loss, start);
        benchmark::DoNotOptimize(out.eta);
        state.counters["backtracks"] = out.backtracks;
    }
}
BENCHMARK(BM_ArmijoSearch)->Arg(1)->Arg(10)->Arg(1000);

void BM_OptimizerStep(benchmark::State& state) {
    const auto& obj = logistic(20);
    RunConfig c;
    c.optimizer = OptimizerKind::amsgrad;
    c.batch_size = 100;
    c.momentum = {MomentumKind::moving_average, 0.9, 0.0};
    c.step_size.kind = static_cast<StepSizeKind>(state.range(0));
    c.step_size.line_search.mode = LineSearchMode::armijo;
    Preconditioner p(c.preconditioner_options(), obj.dim());
    StepSizeController ctrl(c.step_size);
    OptimizerState s(Weights::Zero(obj.dim()), ctrl.initial_eta(), 5);
    for (auto _ : state) {
        const auto batch = sample_batch(s.rng, obj.size(), c.batch_size);
        benchmark::DoNotOptimize(step(s, obj, batch, p, ctrl, c.momentum).eta);
    }
}
BENCHMARK(BM_OptimizerStep)
    ->Arg(static_cast<long>(StepSizeKind::constant))
    ->Arg(static_cast<long>(StepSizeKind::armijo_ls))
    ->Arg(static_cast<long>(StepSizeKind::armijo_sps));

}  // namespace
BENCHMARK_MAIN();
