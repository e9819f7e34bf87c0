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

#include "pla/channel.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "pla/errors.hpp"
#include "pla/parallel.hpp"

namespace pla
{

namespace
{

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream per (seed, element, purpose)
std::mt19937_64 element_stream(std::uint64_t seed, std::size_t element, std::uint64_t purpose)
{
    return std::mt19937_64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(element) * 4 + purpose)));
}

constexpr std::uint64_t noise_stream = 1;
constexpr std::uint64_t diffuse_stream = 2;

} // namespace

std::vector<double> FrequencyGrid::values() const
{
    std::vector<double> f(count);
    for (std::size_t n = 0; n < count; ++n)
        f[n] = at(n);
    return f;
}

FrequencyGrid make_band(double center, double bandwidth, std::size_t count)
{
    if (count < 2)
        throw ConfigError("a frequency band needs at least 2 points");
    if (!(bandwidth > 0.0) || !(center > 0.0))
        throw ConfigError("band center and width must be positive");
    return {center - 0.5 * bandwidth, bandwidth / static_cast<double>(count - 1), count};
}

FrequencyGrid select_band(const FrequencyGrid &grid, double center, double bandwidth, std::size_t *offset)
{
    const double lo = center - 0.5 * bandwidth - 1e-6 * grid.step;
    const double hi = center + 0.5 * bandwidth + 1e-6 * grid.step;
    std::size_t first = grid.count, last = 0;
    for (std::size_t n = 0; n < grid.count; ++n)
    {
        const double f = grid.at(n);
        if (f >= lo && f <= hi)
        {
            first = std::min(first, n);
            last = n;
        }
    }
    if (first >= grid.count || last <= first)
        throw ConfigError("requested band does not overlap the frequency grid with at least 2 points");
    if (offset)
        *offset = first;
    return {grid.at(first), grid.step, last - first + 1};
}

void validate(const ChannelTensor &tensor)
{
    if (tensor.freqs.count < 2 || !(tensor.freqs.step > 0.0))
        throw InvariantError("channel tensor needs a uniform grid with at least 2 frequencies");
    if (static_cast<std::size_t>(tensor.H.cols()) != tensor.freqs.count)
        throw InvariantError("channel tensor column count does not match the frequency grid");
    if (static_cast<std::size_t>(tensor.H.rows()) != tensor.element_positions.size())
        throw InvariantError("channel tensor row count does not match the element count");
}

PathParams path_params(const SpecularPath &path, const ArrayFrame &frame)
{
    if (path.points.size() < 2)
        throw InvariantError("specular path needs at least two points");
    PathParams p;
    p.distance = path.length;
    p.delay = path.length / speed_of_light;
    p.doa = normalized(path.points[1] - path.points[0]);
    p.dod = normalized(path.points[path.points.size() - 2] - path.points.back());
    const Angles a = local_angles(frame.to_local(p.doa));
    p.azimuth = a.azimuth;
    p.elevation = a.elevation;
    return p;
}

cdouble amplitude(const ImageSource &src, double distance, const Vec3 &doa, const Vec3 &dod, double f_c,
                  const Antenna &tx, const Antenna &rx)
{
    if (!(distance > 0.0))
        throw InvariantError("path distance must be positive");
    const double g_tx = antenna_gain(tx.pattern, dod, tx.boresight);
    const double g_rx = antenna_gain(rx.pattern, doa, rx.boresight);
    const double free_space = speed_of_light / (4.0 * std::numbers::pi * f_c * distance);
    return src.gain_factor * (g_tx * g_rx * free_space);
}

CMatrix specular_response(std::span<const SyntheticComponent> components, const FrequencyGrid &freqs,
                          std::size_t elements, int jobs)
{
    CMatrix H = CMatrix::Zero(static_cast<Eigen::Index>(elements), static_cast<Eigen::Index>(freqs.count));
    const auto M = static_cast<std::ptrdiff_t>(elements);
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs))
    for (std::ptrdiff_t m = 0; m < M; ++m)
    {
        for (const auto &comp : components)
        {
            if (!comp.visible[m])
                continue;
            const cdouble a = comp.amplitude[m];
            const double tau = comp.delay[m];
            for (std::size_t n = 0; n < freqs.count; ++n)
                H(m, static_cast<Eigen::Index>(n)) += a * std::polar(1.0, -two_pi * freqs.at(n) * tau);
        }
    }
    return H;
}

CMatrix diffuse_response(const DiffuseSpec &spec, const FrequencyGrid &freqs, std::size_t elements,
                         std::uint64_t seed, int jobs)
{
    CMatrix D = CMatrix::Zero(static_cast<Eigen::Index>(elements), static_cast<Eigen::Index>(freqs.count));
    if (!spec.enabled || spec.power == 0.0)
        return D;
    if (!(spec.decay > 0.0) || spec.power < 0.0)
        throw ConfigError("diffuse decay must be positive and power non-negative");

    const double tap_spacing = 1.0 / (static_cast<double>(freqs.count) * freqs.step);
    const auto taps = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(freqs.count), std::ceil(5.0 * spec.decay / tap_spacing) + 1.0));
    std::vector<double> tap_std(taps);
    for (std::size_t i = 0; i < taps; ++i)
        tap_std[i] = std::sqrt(0.5 * spec.power * std::exp(-static_cast<double>(i) * tap_spacing / spec.decay));

    const auto M = static_cast<std::ptrdiff_t>(elements);
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs))
    for (std::ptrdiff_t m = 0; m < M; ++m)
    {
        auto rng = element_stream(seed, static_cast<std::size_t>(m), diffuse_stream);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t i = 0; i < taps; ++i)
        {
            const double re = normal(rng) * tap_std[i];
            const double im = normal(rng) * tap_std[i];
            const cdouble g(re, im);
            const double tau = spec.onset + static_cast<double>(i) * tap_spacing;
            for (std::size_t n = 0; n < freqs.count; ++n)
                D(m, static_cast<Eigen::Index>(n)) += g * std::polar(1.0, -two_pi * freqs.at(n) * tau);
        }
    }
    return D;
}

void add_noise(CMatrix &H, double noise_var, std::uint64_t seed, int jobs)
{
    if (noise_var < 0.0 || !std::isfinite(noise_var))
        throw ConfigError("noise variance must be finite and non-negative");
    if (noise_var == 0.0)
        return;
    const double sigma = std::sqrt(0.5 * noise_var);
    const auto M = static_cast<std::ptrdiff_t>(H.rows());
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs))
    for (std::ptrdiff_t m = 0; m < M; ++m)
    {
        auto rng = element_stream(seed, static_cast<std::size_t>(m), noise_stream);
        std::normal_distribution<double> normal(0.0, sigma);
        for (Eigen::Index n = 0; n < H.cols(); ++n)
        {
            const double re = normal(rng);
            const double im = normal(rng);
            H(m, n) += cdouble(re, im);
        }
    }
}

double mean_power(const CMatrix &H)
{
    return H.size() == 0 ? 0.0 : H.squaredNorm() / static_cast<double>(H.size());
}

double snr_db(const CMatrix &noise_free, double noise_var)
{
    if (noise_var == 0.0)
        return std::numeric_limits<double>::infinity();
    const double p = mean_power(noise_free);
    if (p == 0.0)
        return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(p / noise_var);
}

SynthesisResult synthesize(const Scene &scene, const Vec3 &ue, const ArrayGeometry &arr, const FrequencyGrid &freqs,
                           const SynthesisOptions &opts)
{
    if (freqs.count < 2 || !(freqs.step > 0.0))
        throw InvariantError("synthesis needs a uniform grid with at least 2 frequencies");
    if (arr.size() == 0)
        throw InvariantError("synthesis needs a non-empty array");

    const auto sources = compute_image_sources(scene, ue, opts.max_order);
    const std::size_t M = arr.size();
    const Antenna rx{opts.rx_pattern, arr.frame.boresight};

    SynthesisResult out;
    out.components.resize(sources.size());
    for (std::size_t k = 0; k < sources.size(); ++k)
    {
        auto &c = out.components[k];
        c.component_id = sources[k].component_id;
        c.visible.assign(M, 0);
        c.delay.assign(M, 0.0);
        c.azimuth.assign(M, 0.0);
        c.elevation.assign(M, 0.0);
        c.amplitude.assign(M, cdouble{});
    }

    const auto count = static_cast<std::ptrdiff_t>(M);
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(opts.jobs))
    for (std::ptrdiff_t m = 0; m < count; ++m)
    {
        const Vec3 &p = arr.element_positions[m];
        for (std::size_t k = 0; k < sources.size(); ++k)
        {
            const auto path = trace_specular_path(scene, sources[k], p);
            if (!path)
                continue;
            const PathParams pp = path_params(*path, arr.frame);
            auto &c = out.components[k];
            c.visible[m] = 1;
            c.delay[m] = pp.delay;
            c.azimuth[m] = pp.azimuth;
            c.elevation[m] = pp.elevation;
            c.amplitude[m] = amplitude(sources[k], pp.distance, pp.doa, pp.dod, arr.f_c, opts.tx, rx);
        }
    }

    for (const auto &c : out.components)
        out.visibility[c.component_id] = c.visible;

    out.noise_free = specular_response(out.components, freqs, M, opts.jobs);
    out.noise_free += diffuse_response(opts.diffuse, freqs, M, opts.seed, opts.jobs);

    out.noise_var = opts.noise_var;
    if (opts.snr_db)
        out.noise_var = mean_power(out.noise_free) / std::pow(10.0, *opts.snr_db / 10.0);

    out.tensor.freqs = freqs;
    out.tensor.H = out.noise_free;
    add_noise(out.tensor.H, out.noise_var, opts.seed, opts.jobs);
    out.tensor.element_positions = arr.element_positions;
    out.tensor.metadata = {arr.f_c, freqs.bandwidth(), opts.scenario.empty() ? scene.environment().name : opts.scenario,
                           opts.seed};
    return out;
}

} // namespace pla
