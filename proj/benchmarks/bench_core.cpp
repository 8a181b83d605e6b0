#include <benchmark/benchmark.h>

#include "geofuse/raster.hpp"
#include "geofuse/recurrent.hpp"
#include "geofuse/rng.hpp"
#include "geofuse/tensor.hpp"

using namespace geofuse;

namespace {

Tensor random_tensor(const Shape& shape, Rng& rng) {
    Tensor t(shape);
    for (double& v : t.values()) v = rng.uniform(-1.0, 1.0);
    return t;
}

void BM_ConvForward(benchmark::State& state) {
    const auto size = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Conv2DLayer layer{random_tensor({32, 3, 3, 3}, rng), random_tensor({32}, rng)};
    const Tensor x = random_tensor({3, size, size}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_forward(x, layer));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(32 * 3 * 9 * size * size));
}
BENCHMARK(BM_ConvForward)->Arg(4)->Arg(16)->Arg(64);

void BM_ConvBackward(benchmark::State& state) {
    Rng rng(2);
    const Conv2DLayer layer{random_tensor({32, 3, 3, 3}, rng), random_tensor({32}, rng)};
    const Tensor x = random_tensor({3, 16, 16}, rng);
    const Tensor g = random_tensor({32, 16, 16}, rng);
    for (auto _ : state) benchmark::DoNotOptimize(conv2d_backward(g, x, layer));
}
BENCHMARK(BM_ConvBackward);

void BM_LstmSequence(benchmark::State& state) {
    const auto hidden = static_cast<std::size_t>(state.range(0));
    Rng rng(3);
    const LstmParams params = LstmParams::random(hidden, 1, rng);
    std::vector<Tensor> xs;
    for (int t = 0; t < 16; ++t) xs.push_back(random_tensor({1}, rng));
    std::vector<Tensor> grads(xs.size(), Tensor({hidden}, 1.0));
    for (auto _ : state) {
        const LstmSequence seq = lstm_sequence_forward(xs, LstmState::zeros(hidden), params);
        benchmark::DoNotOptimize(lstm_backward(grads, seq.caches, params));
    }
}
BENCHMARK(BM_LstmSequence)->Arg(8)->Arg(32);

void BM_PcaFit(benchmark::State& state) {
    Rng rng(4);
    RasterStack s(6, 64, 64);
    for (double& v : s.values()) v = rng.normal();
    for (auto _ : state) benchmark::DoNotOptimize(pca_fit(s, 3));
}
BENCHMARK(BM_PcaFit);

void BM_CodecRoundTrip(benchmark::State& state) {
    Rng rng(5);
    RasterStack s(6, 64, 64);
    for (double& v : s.values()) v = static_cast<float>(rng.normal());
    for (auto _ : state) benchmark::DoNotOptimize(decode_raster(encode_raster(s)));
    state.SetBytesProcessed(state.iterations() * static_cast<long>(s.values().size() * sizeof(float)));
}
BENCHMARK(BM_CodecRoundTrip);

}  // namespace

BENCHMARK_MAIN();
