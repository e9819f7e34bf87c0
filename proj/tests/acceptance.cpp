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

// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "pla/association.hpp"
#include "pla/beamformer.hpp"
#include "pla/channel.hpp"
#include "pla/geometry.hpp"
#include "pla/pipeline.hpp"
#include "pla/sbl.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace pla;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool pass = false;
    std::string detail;
};

template <typename... Args>
std::string format(const char *fmt, Args... args)
{
    char buf[512];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    return buf;
}

struct Component
{
    double delay, az, el;
    cdouble amp;
};

// Noise-free subarray data from unit-norm atoms
CMatrix compose(const Subarray &sub, const ArrayGeometry &arr, const FrequencyGrid &freqs,
                const std::vector<Component> &comps)
{
    const auto f = freqs.values();
    const auto M = static_cast<Eigen::Index>(sub.element_indices.size());
    const auto N = static_cast<Eigen::Index>(f.size());
    CMatrix Y = CMatrix::Zero(M, N);
    for (const auto &c : comps)
    {
        const CVector a = plane_wave_atom(sub, arr, f, c.delay, c.az, c.el);
        for (Eigen::Index m = 0; m < M; ++m)
            for (Eigen::Index n = 0; n < N; ++n)
                Y(m, n) += c.amp * a(m * N + n);
    }
    return Y;
}

void add_noise(CMatrix &Y, double var, std::mt19937_64 &rng)
{
    std::normal_distribution<double> g(0.0, std::sqrt(0.5 * var));
    for (Eigen::Index i = 0; i < Y.size(); ++i)
        Y.data()[i] += cdouble(g(rng), g(rng));
}

// Components with pairwise atom correlation below max_corr
std::vector<Component> separated_components(std::size_t count, const Subarray &sub, const ArrayGeometry &arr,
                                            const FrequencyGrid &freqs, double max_corr, std::mt19937_64 &rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto f = freqs.values();
    for (;;)
    {
        std::vector<Component> comps;
        std::vector<CVector> atoms;
        for (std::size_t k = 0; k < count; ++k)
        {
            const Component c{10e-9 + 50e-9 * u(rng), deg2rad(-50.0 + 100.0 * u(rng)), deg2rad(-30.0 + 60.0 * u(rng)),
                              std::polar(0.5 + 0.5 * u(rng), 2.0 * std::numbers::pi * u(rng))};
            comps.push_back(c);
            atoms.push_back(plane_wave_atom(sub, arr, f, c.delay, c.az, c.el));
        }
        bool ok = true;
        for (std::size_t i = 0; i < count && ok; ++i)
            for (std::size_t j = i + 1; j < count && ok; ++j)
                ok = std::abs(atoms[i].dot(atoms[j])) < max_corr;
        if (ok)
            return comps;
    }
}

double wrapped_delay_error(double a, double b, double period)
{
    return std::abs(std::remainder(a - b, period));
}

// 1. Beamformer against the direct sum
Outcome beamformer_oracle()
{
    const auto arr = make_ura(16, 16, 6.95e9, {0.0, -0.17, 0.83});
    const auto freqs = make_band(6.95e9, 1e9, 64);
    const SpectrumGrid grid{linspace(deg2rad(-60.0), deg2rad(60.0), 20), linspace(deg2rad(-40.0), deg2rad(40.0), 10),
                            linspace(0.5, 5.0, 15)};
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    ChannelTensor t;
    t.freqs = freqs;
    t.element_positions = arr.element_positions;
    t.H.resize(static_cast<Eigen::Index>(arr.size()), static_cast<Eigen::Index>(freqs.count));
    for (Eigen::Index i = 0; i < t.H.size(); ++i)
        t.H.data()[i] = {g(rng), g(rng)};

    const auto start = std::chrono::steady_clock::now();
    const auto fast = spherical_spectrum(t, arr, grid, 1);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto naive = reference::naive_spectrum(t, arr, grid);

    double worst = 0.0;
    for (std::size_t i = 0; i < fast.power.size(); ++i)
        worst = std::max(worst, std::abs(fast.power[i] - naive.power[i]) / naive.power[i]);
    return {worst <= 1e-9 && seconds < 60.0,
            format("max relative deviation %.2e over %zu nodes, %.2f s single-threaded", worst, fast.power.size(),
                   seconds)};
}

// 2. LOS at a grid node, SNR 20 dB
Outcome single_path_localization()
{
    const auto arr = make_ura(16, 16, 6.95e9, {0.0, -0.17, 0.83});
    const auto freqs = make_band(6.95e9, 1e9, 32);
    const SpectrumGrid grid{linspace(-0.6, 0.6, 13), linspace(-0.4, 0.4, 9), linspace(0.6, 3.0, 9)};
    const std::size_t ia = 9, ie = 3, id = 4;
    const Vec3 ue = focus_point(arr, grid.azimuths[ia], grid.elevations[ie], grid.distances[id]);
    const EnvironmentModel env;
    const Scene scene(env);

    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
    {
        SynthesisOptions opts;
        opts.max_order = 0;
        opts.snr_db = 20.0;
        opts.seed = seed;
        const auto syn = synthesize(scene, ue, arr, freqs, opts);
        const auto spec = spherical_spectrum(syn.tensor, arr, grid);
        const auto best = static_cast<std::size_t>(std::max_element(spec.power.begin(), spec.power.end()) -
                                                   spec.power.begin());
        hits += best == spec.index(ia, ie, id) ? 1 : 0;
    }
    return {hits >= 99, format("argmax at the true node in %d/100 runs", hits)};
}

// 3. Three well separated components on a 4x4 subarray
Outcome sbl_recovery()
{
    const auto arr = make_ura(4, 4, 6.95e9, {0.3, -0.05, 1.0});
    const auto subs = partition_subarrays(arr, 4);
    const auto freqs = make_band(6.95e9, 500e6, 51);
    const double B = freqs.bandwidth();
    const double period = 1.0 / freqs.step;
    std::mt19937_64 rng(2024);

    int recovered = 0;
    double worst_residual = 0.0;
    for (int run = 0; run < 100; ++run)
    {
        const auto comps = separated_components(3, subs[0], arr, freqs, 0.1, rng);
        const CMatrix clean = compose(subs[0], arr, freqs, comps);
        CMatrix Y = clean;
        add_noise(Y, mean_power(clean) / 100.0, rng);

        const auto r = sbl_estimate(Y, subs[0], arr, freqs, {});
        bool all = true;
        for (const auto &c : comps)
        {
            bool found = false;
            for (const auto &e : r.estimates)
                found = found || (wrapped_delay_error(e.delay, c.delay, period) <= 0.1 / B &&
                                  std::abs(std::remainder(e.azimuth - c.az, two_pi)) <= deg2rad(1.0) &&
                                  std::abs(e.elevation - c.el) <= deg2rad(1.0));
            all = all && found;
        }
        recovered += all ? 1 : 0;

        const auto noiseless = sbl_estimate(clean, subs[0], arr, freqs, {});
        worst_residual = std::max(worst_residual, noiseless.residual_energy_frac);
    }
    return {recovered >= 95 && worst_residual < 1e-3,
            format("all three recovered in %d/100 runs, worst noiseless residual fraction %.2e", recovered,
                   worst_residual)};
}

// 4. Energy accounting
Outcome energy_accounting()
{
    const auto arr = make_ura(4, 4, 6.95e9, {0.3, -0.05, 1.0});
    const auto subs = partition_subarrays(arr, 4);
    const auto freqs = make_band(6.95e9, 500e6, 51);
    std::mt19937_64 rng(77);

    // noiseless, nearly orthogonal components
    std::vector<SubarrayResult> clean_results;
    for (int run = 0; run < 20; ++run)
    {
        const auto comps = separated_components(3, subs[0], arr, freqs, 0.005, rng);
        auto r = sbl_estimate(compose(subs[0], arr, freqs, comps), subs[0], arr, freqs, {});
        r.subarray_index = run;
        clean_results.push_back(r);
    }
    const EnergyReport clean = energy_report(clean_results, {}, 6);
    const double clean_sum = clean.captured.mean_pct + clean.residual.mean_pct;

    // 25 components plus diffuse energy, budget of 20
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<SubarrayResult> starved_results;
    SBLConfig cfg;
    cfg.max_components = 20;
    for (int run = 0; run < 10; ++run)
    {
        std::vector<Component> comps;
        for (int k = 0; k < 25; ++k)
        {
            const double delay = 10e-9 + 60e-9 * u(rng);
            comps.push_back({delay, deg2rad(-60.0 + 120.0 * u(rng)), deg2rad(-40.0 + 80.0 * u(rng)),
                             std::polar(std::exp(-(delay - 10e-9) / 60e-9), two_pi * u(rng))});
        }
        CMatrix Y = compose(subs[0], arr, freqs, comps);
        const double specular = Y.squaredNorm();
        DiffuseSpec spec{true, 12e-9, 1.0, 15e-9};
        CMatrix D = diffuse_response(spec, freqs, subs[0].element_indices.size(), 1000 + static_cast<std::uint64_t>(run), 1);
        D *= std::sqrt(0.1 * specular / D.squaredNorm());
        Y += D;
        add_noise(Y, mean_power(Y) / 100.0, rng);
        auto r = sbl_estimate(Y, subs[0], arr, freqs, cfg);
        r.subarray_index = run;
        starved_results.push_back(r);
    }
    const EnergyReport starved = energy_report(starved_results, {}, 6);

    const bool pass = clean_sum >= 99.0 && clean_sum <= 101.0 && starved.captured.mean_pct < 95.0;
    return {pass, format("noiseless captured + residual = %.2f %%; 25 components + diffuse with budget 20: captured "
                         "%.1f %% +/- %.1f %%",
                         clean_sum, starved.captured.mean_pct, starved.captured.std_pct)};
}

// 5. Visibility correspondence behind a finite whiteboard
Outcome visibility_correspondence()
{
    const double f_c = 6.95e9;
    const auto arr = make_ura(64, 64, f_c, {0.0, 0.0, 0.5});
    const double d = arr.spacing;
    const Vec3 ue{2.0, 0.7, 1.2};
    const double wall = 3.0;
    const double k = (wall - 0.0) / (2.0 * wall - ue.x); // fraction of the way to the image source
    // reflection points of element rows 30.5 and columns 33.5 bound the board
    const double y_edge = (1.0 - k) * (arr.origin.y + 30.5 * d) + k * ue.y;
    const double z_edge = (1.0 - k) * (arr.origin.z + 33.5 * d) + k * ue.z;
    EnvironmentModel env{"whiteboard",
                         {test::rect("B1", 0, wall, y_edge - 1.0, y_edge, z_edge - 1.0, z_edge, cdouble(-0.8, 0.0)),
                          test::rect("F1", 2, 0.0, -1.0, 6.0, -3.0, 4.0, cdouble(-0.5, 0.0))}};
    env.facets[0].name = "whiteboard";
    env.facets[1].name = "floor";
    const Scene scene(env);

    const auto freqs = make_band(f_c, 500e6, 51);
    SynthesisOptions opts;
    opts.max_order = 1;
    opts.snr_db = 20.0;
    opts.seed = 5;
    opts.rx_pattern = {PatternKind::patch, 2.0, 0.0};
    const auto syn = synthesize(scene, ue, arr, freqs, opts);

    const auto subs = partition_subarrays(arr, 8);
    SBLConfig cfg;
    cfg.band_hz = 500e6;
    const auto run = estimate_subarrays(syn.tensor, arr, subs, cfg);
    const auto sources = compute_image_sources(scene, ue, 1);
    std::vector<Association> assoc;
    for (std::size_t i = 0; i < subs.size(); ++i)
    {
        auto a = associate(run.results[i].estimates, predict(scene, subs[i], arr, sources),
                           default_gates(run.band.bandwidth()));
        a.subarray_index = subs[i].index;
        assoc.push_back(a);
    }
    const auto maps = visibility_and_amplitude_maps(run.results, assoc, arr, subs, true);
    const auto geometric = subarray_visibility("whiteboard", syn.visibility.at("whiteboard"), subs);
    std::size_t visible = 0;
    for (auto c : geometric.cells)
        visible += c;
    const auto it = maps.find("whiteboard");
    if (it == maps.end())
        return {false, "whiteboard never predicted"};
    const double score = mismatch_score(geometric, it->second);
    return {score <= 0.10, format("mismatch %.3f with %zu of %zu subarrays geometrically visible", score, visible,
                                  geometric.cells.size())};
}

// 6. Geometry invariants
Outcome geometry_invariants()
{
    std::mt19937_64 rng(6);
    double worst_mirror = 0.0;
    for (int i = 0; i < 1000; ++i)
    {
        Facet f;
        f.id = "T";
        for (int v = 0; v < 3; ++v)
            f.vertices.push_back(test::random_point(rng, -5.0, 5.0));
        const Vec3 p = test::random_point(rng, -10.0, 10.0);
        worst_mirror = std::max(worst_mirror, distance(mirror_point(mirror_point(p, f), f), p));
    }

    const auto env = io::load_environment(test::data_path("scenes/medium_like.json"));
    const Scene scene(env);
    const auto arr = make_ura(24, 16, 6.95e9, {0.43, 2.0, 1.0});
    const Vec3 ue{4.2, 2.6, 1.546};
    double worst_delay = 0.0;
    std::size_t paths = 0;
    for (const auto &src : compute_image_sources(scene, ue, 2))
        for (const auto &p : arr.element_positions)
            if (const auto path = trace_specular_path(scene, src, p))
            {
                double len = 0.0;
                for (std::size_t s = 1; s < path->points.size(); ++s)
                    len += distance(path->points[s - 1], path->points[s]);
                worst_delay = std::max(worst_delay, std::abs(path->delay * speed_of_light - len) / len);
                ++paths;
            }

    const auto row = make_ura(112, 1, 6.95e9, {0.0, 0.0, 1.0});
    const Vec3 tx{3.0, 0.9, 1.0};
    const double y0 = 1.6143;
    const EnvironmentModel half{"half", {test::rect("half", 0, 1.5, y0, 100.0, -100.0, 100.0)}};
    const auto los = visibility_mask(half, tx, row.element_positions, compute_image_sources(half, tx, 0)).at("LOS");
    const double analytic = (2.0 * y0 - tx.y) / row.spacing;
    std::ptrdiff_t first_dark = -1;
    for (std::size_t m = 0; m < los.size() && first_dark < 0; ++m)
        if (!los[m])
            first_dark = static_cast<std::ptrdiff_t>(m);
    bool monotone = first_dark > 0;
    for (std::size_t m = static_cast<std::size_t>(std::max<std::ptrdiff_t>(first_dark, 0)); m < los.size(); ++m)
        monotone = monotone && los[m] == 0;
    const double boundary_error = std::abs(static_cast<double>(first_dark) - analytic);

    return {worst_mirror <= 1e-12 && worst_delay <= 1e-12 && monotone && boundary_error <= 1.0,
            format("mirror involution %.1e m, delay vs length %.1e over %zu paths, shadow edge off by %.2f elements",
                   worst_mirror, worst_delay, paths, boundary_error)};
}

int run_cli(const std::string &args)
{
    const std::string cmd = std::string(PLASIM_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 7. Determinism across runs and worker counts
Outcome determinism()
{
    const fs::path dir = fs::temp_directory_path() / ("plasim_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    const std::string scenario = test::data_path("scenarios/medium_small.json");
    std::vector<io::json> stages;
    bool ok = true;
    for (const auto &[name, jobs] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 4}})
    {
        const fs::path out = dir / name;
        ok = ok && run_cli("pipeline -q -c " + scenario + " -o " + out.string() + " -j " + std::to_string(jobs)) == 0;
        if (ok)
            stages.push_back(io::read_json_file(out / artifact::manifest).at("stages"));
    }
    fs::remove_all(dir);
    if (!ok)
        return {false, "pipeline run failed"};
    std::size_t files = 0;
    for (const auto &[stage, list] : stages[0].items())
        files += list.size();
    const bool same = stages[0] == stages[1] && stages[0] == stages[2];
    return {same && files > 0,
            format("%zu artifacts, %s across two serial runs and a 4-worker run", files,
                   same ? "identical hashes" : "hashes differ")};
}

// 8. Tiling counts
Outcome tiling()
{
    const auto arr = make_ura(112, 75, 6.95e9, {0.0, 0.0, 1.0});
    const auto four = partition_subarrays(arr, 4).size();
    const auto eight = partition_subarrays(arr, 8).size();
    return {four == 504 && eight == 126, format("112 x 75: %zu tiles of 4 x 4, %zu tiles of 8 x 8", four, eight)};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"beamformer oracle equivalence", beamformer_oracle},
        {"single-path localization", single_path_localization},
        {"SBL recovery", sbl_recovery},
        {"energy accounting", energy_accounting},
        {"visibility correspondence", visibility_correspondence},
        {"geometry invariants", geometry_invariants},
        {"determinism", determinism},
        {"tiling counts", tiling},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i)
    {
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch (const std::exception &e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s  %zu. %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu of %zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
