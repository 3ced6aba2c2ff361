#include "confseg/conformal.hpp"
#include "confseg/mask.hpp"
#include "confseg/rng.hpp"
#include "confseg/set_cover.hpp"
#include "confseg/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace confseg;

namespace {

BinaryMask noisy_mask(Rng& rng, std::uint32_t side, double density) {
    std::vector<std::uint8_t> bits(std::size_t{side} * side, 0);
    for (auto& b : bits) {
        b = rng.uniform() < density ? 1 : 0;
    }
    return BinaryMask::from_bits(side, side, bits);
}

void BM_IouRle(benchmark::State& state) {
    Rng rng(1);
    const auto side = static_cast<std::uint32_t>(state.range(0));
    const BinaryMask a = noisy_mask(rng, side, 0.3);
    const BinaryMask b = noisy_mask(rng, side, 0.3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(iou(a, b));
    }
}
BENCHMARK(BM_IouRle)->Arg(64)->Arg(256);

void BM_Dilate(benchmark::State& state) {
    Rng rng(2);
    const BinaryMask m = noisy_mask(rng, 128, 0.15);
    const auto radius = static_cast<std::uint32_t>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(dilate(m, radius));
    }
}
BENCHMARK(BM_Dilate)->Arg(1)->Arg(3)->Arg(8);

void BM_GreedyCover(benchmark::State& state) {
    Rng rng(3);
    CoverInstance inst;
    inst.universe_size = 2000;
    inst.target = 1600;
    for (int j = 0; j < 64; ++j) {
        Bitset s(inst.universe_size);
        for (std::size_t i = 0; i < inst.universe_size; ++i) {
            if (rng.uniform() < 0.15) {
                s.set(i);
            }
        }
        inst.sets.push_back(std::move(s));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(greedy_partial_cover(inst));
    }
}
BENCHMARK(BM_GreedyCover);

void BM_UniqueExact(benchmark::State& state) {
    Rng rng(4);
    const std::size_t m = static_cast<std::size_t>(state.range(0));
    std::vector<MaskCandidate> cands;
    for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::uint8_t> bits(256, 0);
        const std::size_t from = rng.uniform_int(40);
        const std::size_t len = 10 + rng.uniform_int(30);
        for (std::size_t p = 0; p < len; ++p) {
            bits[from + p] = 1;
        }
        cands.push_back(MaskCandidate{BinaryMask::from_bits(64, 4, bits), i});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(unique(cands, 0.9));
    }
}
BENCHMARK(BM_UniqueExact)->Arg(6)->Arg(10)->Arg(12);

void BM_SceneGeneration(benchmark::State& state) {
    SceneParams params;
    params.width = static_cast<std::uint32_t>(state.range(0));
    params.height = params.width;
    std::uint64_t seed = 0;
    for (auto _ : state) {
        params.rng_seed = seed++;
        benchmark::DoNotOptimize(generate_scene(params));
    }
}
BENCHMARK(BM_SceneGeneration)->Arg(64)->Arg(96)->Arg(128);

void BM_ThresholdModel(benchmark::State& state) {
    SceneParams params;
    params.rng_seed = 9;
    const auto samples = make_dataset(params, 1, 9);
    const QuerySample& s = samples.front();
    double t = 0.1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(threshold_model(*s.scene, s.pixel, t));
        t = t >= 0.9 ? 0.1 : t + 0.04;
    }
}
BENCHMARK(BM_ThresholdModel);

} // namespace

BENCHMARK_MAIN();
