#include "dsolab/dro.hpp"
#include "dsolab/piecewise.hpp"
#include "dsolab/scenario.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

using dsolab::AmbiguitySet;
using dsolab::Vector;

AmbiguitySet uniform_set(std::size_t ns, double eps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    std::vector<Vector> samples;
    for (std::size_t i = 0; i < ns; ++i) {
        Vector s = Vector::Zero(6);
        for (int j = 0; j < 5; ++j) s[j] = u(rng);
        samples.push_back(s);
    }
    return AmbiguitySet::from_samples(std::move(samples), eps);
}

void BM_SolveDro(benchmark::State& state) {
    const auto amb = uniform_set(static_cast<std::size_t>(state.range(0)),
                                 static_cast<double>(state.range(1)) * 1e-3, 11);
    const auto net = dsolab::default_network();
    dsolab::DroOptions opts;
    opts.warn_on_box = false;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dsolab::solve_dro(net, amb, 0.05, opts));
    }
}
BENCHMARK(BM_SolveDro)->Args({10, 0})->Args({10, 10})->Args({100, 0})->Args({100, 10})
    ->Args({250, 40})->Unit(benchmark::kMillisecond);

void BM_CvarMinimize(benchmark::State& state) {
    const auto amb = uniform_set(static_cast<std::size_t>(state.range(0)), 0.02, 12);
    const auto net = dsolab::default_network();
    dsolab::Incentive k{Vector::Constant(1, -0.6), Vector::Constant(1, 0.3)};
    dsolab::CvarEvaluator ev(amb, 0.05);
    ev.set_rows(dsolab::chance_rows(net, k));
    for (auto _ : state) {
        benchmark::DoNotOptimize(ev.minimize());
    }
}
BENCHMARK(BM_CvarMinimize)->Arg(10)->Arg(100)->Arg(250);

void BM_WorstCaseCost(benchmark::State& state) {
    const auto amb = uniform_set(static_cast<std::size_t>(state.range(0)), 0.02, 13);
    dsolab::Incentive k{Vector::Constant(1, -0.6), Vector::Constant(1, 0.3)};
    const auto x = dsolab::lift(k);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dsolab::worst_case_cost(amb, x));
    }
}
BENCHMARK(BM_WorstCaseCost)->Arg(10)->Arg(250);

void BM_MinimizeDual(benchmark::State& state) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<dsolab::DualTerm> terms(static_cast<std::size_t>(state.range(0)));
    for (auto& t : terms) {
        t.p = u(rng);
        t.u = t.p + u(rng);
        t.du = u(rng);
        t.l = t.p + u(rng);
        t.dl = u(rng);
    }
    dsolab::DualWorkspace ws;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dsolab::minimize_dual(terms, 0.05, ws, false));
    }
}
BENCHMARK(BM_MinimizeDual)->Arg(10)->Arg(250);

}  // namespace
BENCHMARK_MAIN();
