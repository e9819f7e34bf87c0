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

#include "pla/beamformer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "pla/errors.hpp"
#include "pla/geometry.hpp"
#include "pla/parallel.hpp"

namespace pla
{

namespace
{

void check_axis(const std::vector<double> &axis, const char *name)
{
    if (axis.empty())
        throw ConfigError(std::string("spectrum grid axis '") + name + "' is empty");
    for (std::size_t i = 1; i < axis.size(); ++i)
        if (!(axis[i] > axis[i - 1]))
            throw ConfigError(std::string("spectrum grid axis '") + name + "' is not strictly increasing");
}

void check_tensor_matches(const ChannelTensor &tensor, const ArrayGeometry &arr)
{
    validate(tensor);
    if (tensor.element_positions.size() != arr.size())
        throw InvariantError("channel tensor has " + std::to_string(tensor.element_positions.size()) +
                             " elements, array has " + std::to_string(arr.size()));
    for (std::size_t m = 0; m < arr.size(); ++m)
        if (distance(tensor.element_positions[m], arr.element_positions[m]) > 1e-9)
            throw InvariantError("channel tensor element " + std::to_string(m) + " does not match the array geometry");
}

} // namespace

void validate(const SpectrumGrid &grid)
{
    check_axis(grid.azimuths, "azimuth");
    check_axis(grid.elevations, "elevation");
    check_axis(grid.distances, "distance");
}

std::vector<double> linspace(double first, double last, std::size_t count)
{
    std::vector<double> v(count);
    if (count == 1)
        v[0] = first;
    for (std::size_t i = 0; count > 1 && i < count; ++i)
        v[i] = first + (last - first) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

Vec3 focus_point(const ArrayGeometry &arr, double azimuth, double elevation, double dist)
{
    return arr.centroid() + arr.frame.to_global(local_direction(azimuth, elevation) * dist);
}

BeamSpectrum spherical_spectrum(const ChannelTensor &tensor, const ArrayGeometry &arr, const SpectrumGrid &grid,
                                int jobs)
{
    validate(grid);
    check_tensor_matches(tensor, arr);

    BeamSpectrum spec;
    spec.grid = grid;
    spec.power.assign(grid.size(), 0.0);

    const std::size_t M = arr.size();
    const std::size_t N = tensor.freqs.count;
    const double f0 = tensor.freqs.start;
    const double df = tensor.freqs.step;
    const double norm = 1.0 / (static_cast<double>(M) * static_cast<double>(N));
    const Vec3 centroid = arr.centroid();
    const std::size_t n_el = grid.elevations.size();
    const std::size_t n_dist = grid.distances.size();
    const auto nodes = static_cast<std::ptrdiff_t>(grid.size());
    std::atomic<std::ptrdiff_t> collision{-1};

#pragma omp parallel for schedule(dynamic, 16) num_threads(resolve_jobs(jobs))
    for (std::ptrdiff_t node = 0; node < nodes; ++node)
    {
        const std::size_t i = static_cast<std::size_t>(node) / (n_el * n_dist);
        const std::size_t j = (static_cast<std::size_t>(node) / n_dist) % n_el;
        const std::size_t k = static_cast<std::size_t>(node) % n_dist;
        const Vec3 p = centroid + arr.frame.to_global(local_direction(grid.azimuths[i], grid.elevations[j]) *
                                                      grid.distances[k]);
        cdouble acc{};
        for (std::size_t m = 0; m < M; ++m)
        {
            const double d = distance(p, arr.element_positions[m]);
            if (d <= plane_tolerance)
                collision.store(static_cast<std::ptrdiff_t>(m));
            // conj(S_mn) = exp(+j 2 pi f_n d / c), advanced by a constant rotation per frequency step
            const cdouble rot = std::polar(1.0, two_pi * df * d / speed_of_light);
            cdouble w = std::polar(1.0, two_pi * f0 * d / speed_of_light);
            const cdouble *row = tensor.H.data() + m * N;
            cdouble sum{};
            for (std::size_t n = 0; n < N; ++n)
            {
                sum += row[n] * w;
                w *= rot;
            }
            acc += sum;
        }
        spec.power[static_cast<std::size_t>(node)] = std::norm(acc * norm);
    }
    if (collision.load() >= 0)
        throw GeometryError("spectrum grid node coincides with array element " + std::to_string(collision.load()));
    return spec;
}

Marginals marginals(const BeamSpectrum &spec)
{
    const auto &g = spec.grid;
    const std::size_t na = g.azimuths.size(), ne = g.elevations.size(), nd = g.distances.size();
    if (spec.power.empty())
        throw InvariantError("cannot project an empty spectrum");

    Marginals out;
    out.az_el = {g.azimuths, g.elevations, std::vector<double>(na * ne, 0.0)};
    out.az_dist = {g.azimuths, g.distances, std::vector<double>(na * nd, 0.0)};
    out.el_dist = {g.elevations, g.distances, std::vector<double>(ne * nd, 0.0)};
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < ne; ++j)
            for (std::size_t k = 0; k < nd; ++k)
            {
                const double p = spec.at(i, j, k);
                out.az_el.values[i * ne + j] = std::max(out.az_el.values[i * ne + j], p);
                out.az_dist.values[i * nd + k] = std::max(out.az_dist.values[i * nd + k], p);
                out.el_dist.values[j * nd + k] = std::max(out.el_dist.values[j * nd + k], p);
            }
    return out;
}

std::vector<Peak> find_peaks(const BeamSpectrum &spec, double min_db_below_max, std::size_t max_peaks)
{
    const auto &g = spec.grid;
    const auto na = static_cast<std::ptrdiff_t>(g.azimuths.size());
    const auto ne = static_cast<std::ptrdiff_t>(g.elevations.size());
    const auto nd = static_cast<std::ptrdiff_t>(g.distances.size());
    if (spec.power.empty())
        return {};

    const double global_max = *std::max_element(spec.power.begin(), spec.power.end());
    if (!(global_max > 0.0))
        return {};
    const double floor = global_max * std::pow(10.0, -min_db_below_max / 10.0);

    std::vector<Peak> peaks;
    for (std::ptrdiff_t i = 0; i < na; ++i)
        for (std::ptrdiff_t j = 0; j < ne; ++j)
            for (std::ptrdiff_t k = 0; k < nd; ++k)
            {
                const std::size_t self = spec.index(i, j, k);
                const double p = spec.power[self];
                if (p < floor || p <= 0.0)
                    continue;
                bool is_peak = true;
                for (std::ptrdiff_t di = -1; di <= 1 && is_peak; ++di)
                    for (std::ptrdiff_t dj = -1; dj <= 1 && is_peak; ++dj)
                        for (std::ptrdiff_t dk = -1; dk <= 1 && is_peak; ++dk)
                        {
                            const std::ptrdiff_t a = i + di, b = j + dj, c = k + dk;
                            if ((di == 0 && dj == 0 && dk == 0) || a < 0 || b < 0 || c < 0 || a >= na || b >= ne || c >= nd)
                                continue;
                            const std::size_t other = spec.index(a, b, c);
                            const double q = spec.power[other];
                            // Plateaus resolve towards the lower grid index
                            if (q > p || (q == p && other < self))
                                is_peak = false;
                        }
                if (is_peak)
                    peaks.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k),
                                     g.azimuths[i], g.elevations[j], g.distances[k], p});
            }

    std::stable_sort(peaks.begin(), peaks.end(), [](const Peak &a, const Peak &b) { return a.power > b.power; });
    if (peaks.size() > max_peaks)
        peaks.resize(max_peaks);
    return peaks;
}

} // namespace pla
