// Serial reference vs OpenMP dense kernels at Q-network shapes.

#include <benchmark/benchmark.h>

#include "ubood/nn/kernels.hpp"
#include "ubood/rng.hpp"

namespace k = ubood::nn::kernels;
using ubood::nn::Matrix;

namespace {

struct Shapes {
    Matrix x, dy, y, dx;
    std::vector<double> w, b, dw, db;

    Shapes(int rows, int in, int out, double density) : x(rows, in), dy(rows, out), y(rows, out), dx(rows, in) {
        ubood::Rng rng(42);
        for (double& v : x.data()) v = rng.uniform() < density ? rng.uniform(-1, 1) : 0.0;
        for (double& v : dy.data()) v = rng.uniform(-1, 1);
        w.resize(static_cast<std::size_t>(in) * out);
        for (double& v : w) v = rng.uniform(-1, 1);
        b.assign(out, 0.1);
        dw.assign(w.size(), 0.0);
        db.assign(out, 0.0);
    }
};

template <bool Parallel>
void BM_Forward(benchmark::State& state) {
    Shapes s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 1.0);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::dense_forward(s.x, s.w, s.b, s.y);
        else
            k::dense_forward_serial(s.x, s.w, s.b, s.y);
        benchmark::DoNotOptimize(s.y.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <bool Parallel>
void BM_BackwardInput(benchmark::State& state) {
    Shapes s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 1.0);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::dense_backward_input(s.dy, s.w, s.dx);
        else
            k::dense_backward_input_serial(s.dy, s.w, s.dx);
        benchmark::DoNotOptimize(s.dx.data().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <bool Parallel>
void BM_BackwardParams(benchmark::State& state) {
    Shapes s(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), static_cast<int>(state.range(2)), 1.0);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::dense_backward_params(s.x, s.dy, s.dw, s.db);
        else
            k::dense_backward_params_serial(s.x, s.dy, s.dw, s.db);
        benchmark::DoNotOptimize(s.dw.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

// rows x in x out: training batch through the trunk, the head layer, and an
// MC-dropout prediction batch of 80 passes.
void shapes(benchmark::internal::Benchmark* b) {
    b->Args({32, 64, 64})->Args({32, 64, 40})->Args({80, 144, 64})->Args({256, 64, 64});
}

} // namespace

BENCHMARK(BM_Forward<false>)->Apply(shapes);
BENCHMARK(BM_Forward<true>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<false>)->Apply(shapes);
BENCHMARK(BM_BackwardInput<true>)->Apply(shapes);
BENCHMARK(BM_BackwardParams<false>)->Apply(shapes);
BENCHMARK(BM_BackwardParams<true>)->Apply(shapes);

BENCHMARK_MAIN();
