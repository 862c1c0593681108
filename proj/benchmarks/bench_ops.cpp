#include <benchmark/benchmark.h>

#include "dcys/model.hpp"
#include "dcys/ops.hpp"
#include "dcys/rng.hpp"

using namespace dcys;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    return t;
}

void BM_Conv2dForward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Tensor in = random_tensor({8, c, 36, 36}, 1);
    const Tensor w = random_tensor({c, c, 3, 3}, 2);
    for (auto _ : state) {
        Tensor out = conv2d_forward(in, w, 1, 1);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * in.dim(0));
}
BENCHMARK(BM_Conv2dForward)->Arg(16)->Arg(64);

void BM_Conv2dBackward(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    const Tensor in = random_tensor({8, c, 36, 36}, 1);
    const Tensor w = random_tensor({c, c, 3, 3}, 2);
    const Tensor gout = random_tensor({8, c, 36, 36}, 3);
    for (auto _ : state) {
        Tensor gin, gw;
        conv2d_backward(gout, in, w, 1, 1, gin, gw);
        benchmark::DoNotOptimize(gin.data.data());
    }
    state.SetItemsProcessed(state.iterations() * in.dim(0));
}
BENCHMARK(BM_Conv2dBackward)->Arg(16)->Arg(64);

void BM_BatchNormForward(benchmark::State& state) {
    const Tensor in = random_tensor({8, 64, 36, 36}, 4);
    BatchNormStateT<float> st(64);
    for (auto _ : state) {
        BatchNormStateT<float> copy = st;
        BatchNormCache<float> cache;
        Tensor out = batchnorm_forward(in, copy, true, &cache);
        benchmark::DoNotOptimize(out.data.data());
    }
}
BENCHMARK(BM_BatchNormForward);

void BM_DenseNetForward(benchmark::State& state) {
    DenseNetSpec spec;
    spec.num_blocks = 2;
    spec.layers_per_block = 4;
    spec.growth_rate = 8;
    spec.initial_channels = 16;
    spec.bottleneck_factor = 2;
    spec.input_size = 64;
    LayerGraph g = build_densenet(spec);
    init_parameters(g, 1);
    const Tensor x = random_tensor({4, 1, 64, 64}, 5);
    for (auto _ : state) {
        Tensor probs = graph_forward(g, x, Mode::Eval);
        benchmark::DoNotOptimize(probs.data.data());
    }
    state.SetItemsProcessed(state.iterations() * x.dim(0));
}
BENCHMARK(BM_DenseNetForward);

}  // namespace

BENCHMARK_MAIN();
