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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pla/channel.hpp"
#include "pla/errors.hpp"
#include "pla/io.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace pla;
using pla::test::rect;

namespace
{

SyntheticComponent random_component(std::mt19937_64 &rng, std::size_t M, double visible_prob = 1.0)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SyntheticComponent c;
    c.component_id = "c" + std::to_string(rng() % 1000);
    for (std::size_t m = 0; m < M; ++m)
    {
        const bool vis = u(rng) < visible_prob;
        c.visible.push_back(vis ? 1 : 0);
        c.delay.push_back(5e-9 + 40e-9 * u(rng));
        c.azimuth.push_back(0.0);
        c.elevation.push_back(0.0);
        c.amplitude.push_back(vis ? std::polar(0.01 + u(rng), 6.0 * u(rng)) : cdouble{});
    }
    return c;
}

double max_abs(const CMatrix &A)
{
    return A.cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("frequency grids")
{
    const auto g = make_band(6.95e9, 500e6, 51);
    CHECK(g.count == 51);
    CHECK(g.step == doctest::Approx(10e6));
    CHECK(g.bandwidth() == doctest::Approx(500e6));
    CHECK(g.center() == doctest::Approx(6.95e9));
    CHECK_THROWS_AS(make_band(6.95e9, 500e6, 1), ConfigError);

    std::size_t offset = 0;
    const auto wide = make_band(6.5e9, 3e9, 301);
    const auto sub = select_band(wide, 6.95e9, 500e6, &offset);
    CHECK(sub.step == doctest::Approx(wide.step));
    CHECK(sub.at(0) == doctest::Approx(wide.at(offset)));
    CHECK(sub.bandwidth() >= 500e6 - 1.0);
    CHECK(sub.bandwidth() <= 500e6 + wide.step + 1.0);
    CHECK(std::abs(sub.center() - 6.95e9) <= wide.step);
}

TEST_CASE("path parameters")
{
    SUBCASE("direct path along boresight")
    {
        const EnvironmentModel env;
        const Vec3 rx{0, 0, 0};
        const auto path = trace_specular_path(env, compute_image_sources(env, {3, 0, 0}, 0)[0], rx);
        const auto pp = path_params(*path, ArrayFrame{});
        CHECK(pp.azimuth == doctest::Approx(0.0));
        CHECK(pp.elevation == doctest::Approx(0.0));
        CHECK(pp.delay * 1e9 == doctest::Approx(10.007).epsilon(1e-4));
        CHECK(pp.distance == doctest::Approx(3.0));
    }

    SUBCASE("floor bounce")
    {
        const EnvironmentModel env{"floor", {rect("floor", 2, 0.0, -1e3, 1e3, -1e3, 1e3)}};
        const auto src = compute_image_sources(env, {2, 0, 1}, 1);
        const auto pp = path_params(*trace_specular_path(env, src[1], {0, 0, 1}), ArrayFrame{});
        CHECK(pp.delay == doctest::Approx(2.0 * std::sqrt(2.0) / speed_of_light).epsilon(1e-14));
        CHECK(pp.elevation == doctest::Approx(-std::numbers::pi / 4.0));
        CHECK(pp.azimuth == doctest::Approx(0.0));
    }

    SUBCASE("window path in the shipped scene")
    {
        const auto env = io::load_environment(test::data_path("scenes/medium_like.json"));
        const Vec3 ue{4.2, 2.6, 1.546}, rx{0.43, 2.5, 1.3};
        const auto src = compute_image_sources(env, ue, 1);
        const auto it = std::find_if(src.begin(), src.end(), [](const ImageSource &s) { return s.component_id == "window"; });
        REQUIRE(it != src.end());
        const auto path = trace_specular_path(env, *it, rx);
        REQUIRE(path);
        const Facet *window = nullptr;
        for (const auto &f : env.facets)
            if (f.name == "window")
                window = &f;
        const auto q = reference::fermat_reflection_point(*window, rx, ue);
        REQUIRE(q);
        const auto pp = path_params(*path, ArrayFrame{});
        CHECK(std::abs(pp.distance - (distance(rx, *q) + distance(*q, ue))) < 1e-9);
        const Vec3 doa = normalized(*q - rx);
        CHECK(pp.azimuth == doctest::Approx(std::atan2(doa.y, doa.x)).epsilon(1e-6));
    }
}

TEST_CASE("amplitude model")
{
    const Antenna iso{{PatternKind::isotropic, 0.0, 0.0}, {1, 0, 0}};
    ImageSource unit;
    unit.gain_factor = 1.0;
    const Vec3 fwd{1, 0, 0};
    const double a1 = std::abs(amplitude(unit, 1.0, fwd, fwd, 6.95e9, iso, iso));
    CHECK(a1 == doctest::Approx(3.433e-3).epsilon(1e-3));
    CHECK(a1 == doctest::Approx(speed_of_light / (4.0 * std::numbers::pi * 6.95e9)));
    CHECK(std::abs(amplitude(unit, 2.0, fwd, fwd, 6.95e9, iso, iso)) == doctest::Approx(a1 / 2.0));

    // rx boresight +x; arrival direction points from the element towards the source
    const Antenna rx{{PatternKind::patch, 2.0, 0.0}, {1, 0, 0}};
    const Antenna tx{{PatternKind::patch, 2.0, 0.0}, {-1, 0, 0}};
    const double c60 = std::cos(deg2rad(60.0)), s60 = std::sin(deg2rad(60.0));
    const double a2 = std::abs(amplitude(unit, 1.0, {c60, s60, 0}, {-c60, 0, s60}, 6.95e9, tx, rx));
    CHECK(a2 == doctest::Approx(a1 * 0.0625));

    ImageSource lossy;
    lossy.gain_factor = std::polar(0.5, 2.0);
    const cdouble a3 = amplitude(lossy, 1.0, fwd, fwd, 6.95e9, iso, iso);
    CHECK(std::arg(a3) == doctest::Approx(2.0));
    CHECK(std::abs(a3) == doctest::Approx(0.5 * a1));

    CHECK_THROWS_AS(amplitude(unit, 0.0, fwd, fwd, 6.95e9, iso, iso), InvariantError);
    CHECK_THROWS_AS(amplitude(unit, -1.0, fwd, fwd, 6.95e9, iso, iso), InvariantError);
}

TEST_CASE("synthesis")
{
    const auto arr = make_ura(4, 4, 6.95e9, {0.0, -0.03, 1.0});
    const auto freqs = make_band(6.95e9, 500e6, 32);

    SUBCASE("single visible path has a flat magnitude over frequency")
    {
        const EnvironmentModel env;
        const Scene scene(env);
        SynthesisOptions opts;
        opts.max_order = 0;
        const auto res = synthesize(scene, {3.0, 0.0, 1.0}, arr, freqs, opts);
        for (Eigen::Index m = 0; m < res.tensor.H.rows(); ++m)
            for (Eigen::Index n = 0; n < res.tensor.H.cols(); ++n)
                CHECK(std::abs(res.tensor.H(m, n)) == doctest::Approx(std::abs(res.tensor.H(m, 0))).epsilon(1e-12));
        CHECK(std::isinf(snr_db(res.noise_free, res.noise_var)));
        CHECK(snr_db(res.noise_free, res.noise_var) > 0.0);
    }

    SUBCASE("no visible path leaves only noise")
    {
        const EnvironmentModel env{"box", {rect("wall", 0, 1.5, -10, 10, -10, 10)}};
        const Scene scene(env);
        const auto big = make_ura(16, 16, 6.95e9, {0.0, 0.0, 1.0});
        SynthesisOptions opts;
        opts.max_order = 0;
        opts.snr_db.reset();
        opts.noise_var = 2.5e-7;
        opts.seed = 17;
        const auto res = synthesize(scene, {3.0, 0.0, 1.0}, big, make_band(6.95e9, 500e6, 64), opts);
        CHECK(max_abs(res.noise_free) == 0.0);
        const double p = mean_power(res.tensor.H);
        const double MN = static_cast<double>(res.tensor.H.size());
        CHECK(std::abs(p - opts.noise_var) / opts.noise_var <= 3.0 / std::sqrt(MN));
        CHECK(snr_db(res.noise_free, res.noise_var) == -std::numeric_limits<double>::infinity());
    }

    SUBCASE("specular sum matches the direct-sum oracle")
    {
        std::mt19937_64 rng(8);
        std::vector<SyntheticComponent> comps;
        for (int k = 0; k < 3; ++k)
            comps.push_back(random_component(rng, arr.size(), 0.7));
        const CMatrix fast = specular_response(comps, freqs, arr.size());
        const CMatrix naive = reference::naive_specular_sum(comps, freqs, arr.size());
        CHECK(max_abs(fast - naive) <= 1e-12 * max_abs(naive));
    }

    SUBCASE("synthesized tensor equals the oracle sum of its components")
    {
        const auto env = io::load_environment(test::data_path("scenes/medium_like.json"));
        const Scene scene(env);
        const auto a = make_ura(12, 8, 6.95e9, {0.43, 2.0, 1.0});
        SynthesisOptions opts;
        opts.max_order = 2;
        opts.snr_db.reset();
        const auto res = synthesize(scene, {4.2, 2.6, 1.5}, a, freqs, opts);
        const CMatrix naive = reference::naive_specular_sum(res.components, freqs, a.size());
        CHECK(max_abs(res.tensor.H - naive) <= 1e-12 * max_abs(naive));
        for (const auto &c : res.components)
            for (std::size_t m = 0; m < a.size(); ++m)
                if (!c.visible[m])
                    CHECK(c.amplitude[m] == cdouble{});
    }

    SUBCASE("calibrated SNR of a single path")
    {
        const EnvironmentModel env;
        const Scene scene(env);
        SynthesisOptions opts;
        opts.max_order = 0;
        opts.snr_db.reset();
        opts.noise_var = 1e-9;
        const auto res = synthesize(scene, {3.0, 0.0, 1.0}, arr, freqs, opts);
        double p = 0.0;
        for (const auto &a : res.components[0].amplitude)
            p += std::norm(a);
        p /= static_cast<double>(arr.size());
        CHECK(snr_db(res.noise_free, 1e-9) == doctest::Approx(10.0 * std::log10(p / 1e-9)));

        opts.snr_db = 20.0;
        const auto res20 = synthesize(scene, {3.0, 0.0, 1.0}, arr, freqs, opts);
        CHECK(snr_db(res20.noise_free, res20.noise_var) == doctest::Approx(20.0));
    }
}

TEST_CASE("synthesis properties")
{
    const auto freqs = make_band(6.95e9, 500e6, 24);
    std::mt19937_64 rng(31);
    const std::size_t M = 20;

    SUBCASE("linearity")
    {
        std::vector<SyntheticComponent> comps{random_component(rng, M, 0.8), random_component(rng, M, 0.5),
                                              random_component(rng, M)};
        CMatrix sum = CMatrix::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(freqs.count));
        for (const auto &c : comps)
            sum += specular_response(std::span(&c, 1), freqs, M);
        const CMatrix all = specular_response(comps, freqs, M);
        CHECK(max_abs(all - sum) <= 1e-12 * max_abs(all));
    }

    SUBCASE("visibility gating touches only the gated rows")
    {
        std::vector<SyntheticComponent> comps{random_component(rng, M), random_component(rng, M)};
        const CMatrix before = specular_response(comps, freqs, M);
        for (std::size_t m : {2u, 5u, 11u})
        {
            comps[1].visible[m] = 0;
            comps[1].amplitude[m] = 0.0;
        }
        const CMatrix after = specular_response(comps, freqs, M);
        for (std::size_t m = 0; m < M; ++m)
        {
            const bool gated = m == 2 || m == 5 || m == 11;
            const double diff = (after.row(static_cast<Eigen::Index>(m)) - before.row(static_cast<Eigen::Index>(m))).norm();
            CHECK((diff > 0.0) == gated);
        }
    }

    SUBCASE("seeded noise and diffuse are reproducible and job independent")
    {
        const DiffuseSpec diffuse{true, 10e-9, 1e-6, 8e-9};
        const CMatrix d1 = diffuse_response(diffuse, freqs, M, 42, 1);
        const CMatrix d2 = diffuse_response(diffuse, freqs, M, 42, 3);
        const CMatrix d3 = diffuse_response(diffuse, freqs, M, 43, 1);
        CHECK(d1 == d2);
        CHECK(!(d1 == d3));

        CMatrix n1 = CMatrix::Zero(static_cast<Eigen::Index>(M), 24), n2 = n1, n3 = n1;
        add_noise(n1, 1e-3, 5, 1);
        add_noise(n2, 1e-3, 5, 4);
        add_noise(n3, 1e-3, 6, 1);
        CHECK(n1 == n2);
        CHECK(!(n1 == n3));
        CHECK(!(n1 == d1));
    }

    SUBCASE("Parseval")
    {
        const std::vector<SyntheticComponent> comps{random_component(rng, M), random_component(rng, M)};
        CMatrix H = specular_response(comps, freqs, M);
        add_noise(H, 1e-2, 1);
        const std::size_t N = freqs.count;
        for (Eigen::Index m = 0; m < H.rows(); ++m)
        {
            double time_energy = 0.0;
            for (std::size_t k = 0; k < N; ++k)
            {
                cdouble h = 0.0;
                for (std::size_t n = 0; n < N; ++n)
                    h += H(m, static_cast<Eigen::Index>(n)) *
                         std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(k * n) / static_cast<double>(N));
                time_energy += std::norm(h) / static_cast<double>(N);
            }
            const double freq_energy = H.row(m).squaredNorm();
            CHECK(std::abs(time_energy - freq_energy) <= 1e-9 * freq_energy);
        }
    }

    SUBCASE("diffuse power-delay profile")
    {
        const auto g = make_band(6.95e9, 500e6, 64);
        const double spacing = 1.0 / (64.0 * g.step);
        const DiffuseSpec diffuse{true, 3.0 * spacing, 2e-4, 6e-9};
        const std::size_t elements = 800;
        const CMatrix D = diffuse_response(diffuse, g, elements, 99);
        std::vector<double> pdp(64, 0.0);
        for (Eigen::Index m = 0; m < D.rows(); ++m)
            for (std::size_t k = 0; k < 64; ++k)
            {
                cdouble h = 0.0;
                for (std::size_t n = 0; n < 64; ++n)
                    h += D(m, static_cast<Eigen::Index>(n)) *
                         std::polar(1.0, 2.0 * std::numbers::pi * g.at(n) * (static_cast<double>(k) * spacing));
                pdp[k] += std::norm(h / 64.0) / static_cast<double>(elements);
            }
        CHECK(pdp[0] < 1e-3 * diffuse.power);
        CHECK(pdp[3] == doctest::Approx(diffuse.power).epsilon(0.2));
        for (int k = 1; k <= 4; ++k)
            CHECK(pdp[3 + static_cast<std::size_t>(k)] ==
                  doctest::Approx(diffuse.power * std::exp(-k * spacing / diffuse.decay)).epsilon(0.25));
    }
}

TEST_CASE("tensor validation")
{
    ChannelTensor t;
    t.freqs = make_band(6.95e9, 500e6, 4);
    t.H = CMatrix::Zero(2, 4);
    t.element_positions = {{0, 0, 0}, {0, 0.02, 0}};
    CHECK_NOTHROW(validate(t));
    t.H = CMatrix::Zero(2, 5);
    CHECK_THROWS_AS(validate(t), InvariantError);
    t.H = CMatrix::Zero(3, 4);
    CHECK_THROWS_AS(validate(t), InvariantError);
}
