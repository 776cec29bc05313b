#include <benchmark/benchmark.h>

#include <vector>

#include "unlearn/data_io.hpp"
#include "unlearn/generator.hpp"
#include "unlearn/model.hpp"
#include "unlearn/perturb.hpp"
#include "unlearn/rng.hpp"

using namespace unlearn;

namespace {

ModelState bench_model() {
    return init_model(Architecture::parse("mlp 20 32 3 tanh"), 1);
}

LabeledDataset bench_data() { return synth_blobs(3, 100, 20, 4.0, 1); }

void BM_forward(benchmark::State& state) {
    const auto model = bench_model();
    const auto data = bench_data();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(predict_proba(model, data.sample(i)));
        i = (i + 1) % data.num_samples;
    }
}
BENCHMARK(BM_forward);

void BM_backward(benchmark::State& state) {
    const auto model = bench_model();
    const auto data = bench_data();
    const std::size_t n = 64;
    Batch batch{std::span(data.features).subspan(0, n * data.dim),
                std::span(data.labels).subspan(0, n)};
    for (auto _ : state) {
        benchmark::DoNotOptimize(loss_and_grads(model, batch, LossSpec{1.0}));
    }
}
BENCHMARK(BM_backward);

void BM_pgd_minimize(benchmark::State& state) {
    const auto model = bench_model();
    const auto data = bench_data();
    const std::size_t n = 64;
    const std::vector<double> xs(data.features.begin(),
                                 data.features.begin() +
                                     static_cast<long>(n * data.dim));
    const std::vector<int> ys(data.labels.begin(), data.labels.begin() + n);
    const PerturbationBudget budget{0.25, 0.05, 8, PerturbInit::Zero};
    for (auto _ : state) {
        benchmark::DoNotOptimize(pgd_error_minimize(
            model, xs, ys, FeatureBounds{data.lo, data.hi}, budget, 7));
    }
}
BENCHMARK(BM_pgd_minimize);

} // namespace

BENCHMARK_MAIN();
