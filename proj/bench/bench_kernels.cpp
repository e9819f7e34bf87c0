// SPDX-License-Identifier: Apache-2.0
//
// plasim - propagation modelling and analysis for physically large arrays
// Copyright (C) 2026 The plasim authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// OpenMP kernels against the serial reference implementations.
// The worker count is the benchmark argument where it applies; those report wall time.

#include <benchmark/benchmark.h>

#include <random>

#include "pla/beamformer.hpp"
#include "pla/channel.hpp"
#include "pla/geometry.hpp"
#include "pla/io.hpp"
#include "pla/sbl.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace pla;

namespace
{

const ArrayGeometry &array16()
{
    static const auto arr = make_ura(16, 16, 6.95e9, {0.0, -0.17, 0.83});
    return arr;
}

const ChannelTensor &tensor16()
{
    static const ChannelTensor t = [] {
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        ChannelTensor t;
        t.freqs = make_band(6.95e9, 1e9, 64);
        t.element_positions = array16().element_positions;
        t.H.resize(static_cast<Eigen::Index>(array16().size()), 64);
        for (Eigen::Index i = 0; i < t.H.size(); ++i)
            t.H.data()[i] = {g(rng), g(rng)};
        return t;
    }();
    return t;
}

const SpectrumGrid &grid()
{
    static const SpectrumGrid g{linspace(-1.0, 1.0, 20), linspace(-0.7, 0.7, 10), linspace(0.5, 5.0, 15)};
    return g;
}

struct SceneFixture
{
    EnvironmentModel env = io::load_environment(test::data_path("scenes/medium_like.json"));
    ArrayGeometry arr = make_ura(48, 32, 6.95e9, {0.43, 2.0, 1.0});
    Vec3 ue{4.2, 2.6, 1.546};
};

const SceneFixture &scene_fixture()
{
    static const SceneFixture f;
    return f;
}

void spectrum_kernel(benchmark::State &state)
{
    const int jobs = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(spherical_spectrum(tensor16(), array16(), grid(), jobs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid().size()));
}
BENCHMARK(spectrum_kernel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void spectrum_reference(benchmark::State &state)
{
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::naive_spectrum(tensor16(), array16(), grid()));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid().size()));
}
BENCHMARK(spectrum_reference)->Unit(benchmark::kMillisecond);

void synthesis_kernel(benchmark::State &state)
{
    const auto &f = scene_fixture();
    const Scene scene(f.env);
    SynthesisOptions opts;
    opts.jobs = static_cast<int>(state.range(0));
    const auto freqs = make_band(6.95e9, 1e9, 101);
    for (auto _ : state)
        benchmark::DoNotOptimize(synthesize(scene, f.ue, f.arr, freqs, opts));
}
BENCHMARK(synthesis_kernel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void specular_sum_reference(benchmark::State &state)
{
    const auto &f = scene_fixture();
    const Scene scene(f.env);
    SynthesisOptions opts;
    opts.jobs = 1;
    const auto freqs = make_band(6.95e9, 1e9, 101);
    const auto syn = synthesize(scene, f.ue, f.arr, freqs, opts);
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::naive_specular_sum(syn.components, freqs, f.arr.size()));
}
BENCHMARK(specular_sum_reference)->Unit(benchmark::kMillisecond);

void specular_sum_kernel(benchmark::State &state)
{
    const auto &f = scene_fixture();
    const Scene scene(f.env);
    SynthesisOptions opts;
    opts.jobs = 1;
    const auto freqs = make_band(6.95e9, 1e9, 101);
    const auto syn = synthesize(scene, f.ue, f.arr, freqs, opts);
    for (auto _ : state)
        benchmark::DoNotOptimize(specular_response(syn.components, freqs, f.arr.size(), static_cast<int>(state.range(0))));
}
BENCHMARK(specular_sum_kernel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void visibility_kernel(benchmark::State &state)
{
    const auto &f = scene_fixture();
    const auto sources = compute_image_sources(f.env, f.ue, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            visibility_mask(f.env, f.ue, f.arr.element_positions, sources, static_cast<int>(state.range(0))));
}
BENCHMARK(visibility_kernel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

void estimation_kernel(benchmark::State &state)
{
    const auto arr = make_ura(16, 16, 6.95e9, {0.43, 2.0, 1.0});
    const auto &f = scene_fixture();
    const Scene scene(f.env);
    SynthesisOptions opts;
    opts.snr_db = 20.0;
    opts.seed = 3;
    const auto syn = synthesize(scene, f.ue, arr, make_band(6.95e9, 500e6, 51), opts);
    const auto subs = partition_subarrays(arr, 4);
    SBLConfig cfg;
    cfg.band_hz = 500e6;
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_subarrays(syn.tensor, arr, subs, cfg, static_cast<int>(state.range(0))));
}
BENCHMARK(estimation_kernel)->Arg(1)->Arg(2)->Arg(4)->UseRealTime()->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
