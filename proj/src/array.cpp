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

#include "pla/array.hpp"

#include <algorithm>
#include <cmath>

#include "pla/errors.hpp"
#include "pla/geometry.hpp"

namespace pla
{

ArrayFrame frame_from_boresight(const Vec3 &boresight)
{
    const Vec3 b = normalized(boresight);
    if (norm(b) == 0.0)
        throw ConfigError("array boresight must be non-zero");
    Vec3 h = cross(Vec3{0.0, 0.0, 1.0}, b);
    if (norm(h) < 1e-9)
        h = Vec3{0.0, 1.0, 0.0};
    h = normalized(h);
    return {b, h, cross(b, h)};
}

Vec3 ArrayGeometry::centroid() const
{
    Vec3 c;
    for (const auto &p : element_positions)
        c += p;
    return element_positions.empty() ? c : c / static_cast<double>(element_positions.size());
}

ArrayGeometry make_ura(int rows, int cols, double f_c, const Vec3 &origin, const ArrayFrame &orientation)
{
    if (rows < 1 || cols < 1)
        throw ConfigError("array dimensions must be positive, got " + std::to_string(rows) + " x " + std::to_string(cols));
    if (!(f_c > 0.0))
        throw ConfigError("carrier frequency must be positive");

    ArrayGeometry arr;
    arr.rows = rows;
    arr.cols = cols;
    arr.f_c = f_c;
    arr.spacing = speed_of_light / (2.0 * f_c);
    arr.origin = origin;
    arr.frame = orientation;
    arr.element_positions.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            arr.element_positions.push_back(origin + orientation.horizontal * (r * arr.spacing) +
                                            orientation.vertical * (c * arr.spacing));
    return arr;
}

std::vector<Subarray> partition_subarrays(const ArrayGeometry &arr, int size)
{
    if (size < 1 || size > std::min(arr.rows, arr.cols))
        throw ConfigError("subarray size " + std::to_string(size) + " does not fit a " + std::to_string(arr.rows) +
                          " x " + std::to_string(arr.cols) + " array");

    const int tile_rows = arr.rows / size;
    const int tile_cols = arr.cols / size;
    std::vector<Subarray> tiles;
    tiles.reserve(static_cast<std::size_t>(tile_rows) * tile_cols);
    for (int tr = 0; tr < tile_rows; ++tr)
    {
        for (int tc = 0; tc < tile_cols; ++tc)
        {
            Subarray sub;
            sub.index = static_cast<int>(tiles.size());
            sub.tile_row = tr;
            sub.tile_col = tc;
            sub.element_indices.reserve(static_cast<std::size_t>(size) * size);
            Vec3 c;
            for (int i = 0; i < size; ++i)
            {
                for (int j = 0; j < size; ++j)
                {
                    const std::size_t idx = static_cast<std::size_t>(tr * size + i) * arr.cols + (tc * size + j);
                    sub.element_indices.push_back(idx);
                    c += arr.element_positions[idx];
                }
            }
            sub.centroid = c / static_cast<double>(sub.element_indices.size());
            tiles.push_back(std::move(sub));
        }
    }
    return tiles;
}

TileGrid tile_grid(std::span<const Subarray> subarrays)
{
    TileGrid g;
    for (const auto &s : subarrays)
    {
        g.rows = std::max(g.rows, s.tile_row + 1);
        g.cols = std::max(g.cols, s.tile_col + 1);
    }
    return g;
}

Vec3 local_direction(double azimuth, double elevation)
{
    const double ce = std::cos(elevation);
    return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

Angles local_angles(const Vec3 &d)
{
    const Vec3 u = normalized(d);
    return {std::atan2(u.y, u.x), std::asin(std::clamp(u.z, -1.0, 1.0))};
}

CVector plane_wave_atom(const Subarray &sub, const ArrayGeometry &arr, std::span<const double> freqs,
                        double delay, double azimuth, double elevation)
{
    const std::size_t M = sub.element_indices.size();
    const std::size_t N = freqs.size();
    const Vec3 u = arr.frame.to_global(local_direction(azimuth, elevation));
    const double scale = 1.0 / std::sqrt(static_cast<double>(M * N));

    CVector atom(static_cast<Eigen::Index>(M * N));
    for (std::size_t m = 0; m < M; ++m)
    {
        // Element delay relative to the centroid reference
        const double tau = delay - dot(arr.element_positions[sub.element_indices[m]] - sub.centroid, u) / speed_of_light;
        for (std::size_t n = 0; n < N; ++n)
            atom[static_cast<Eigen::Index>(m * N + n)] = std::polar(scale, -two_pi * freqs[n] * tau);
    }
    return atom;
}

CMatrix spherical_steering(const ArrayGeometry &arr, const Vec3 &point, std::span<const double> freqs)
{
    CMatrix S(static_cast<Eigen::Index>(arr.size()), static_cast<Eigen::Index>(freqs.size()));
    for (std::size_t m = 0; m < arr.size(); ++m)
    {
        const double d = distance(point, arr.element_positions[m]);
        if (d <= plane_tolerance)
            throw GeometryError("steering point coincides with array element " + std::to_string(m));
        for (std::size_t n = 0; n < freqs.size(); ++n)
            S(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = std::polar(1.0, -two_pi * freqs[n] * d / speed_of_light);
    }
    return S;
}

double antenna_gain(const AntennaPattern &pattern, const Vec3 &direction, const Vec3 &boresight)
{
    if (pattern.kind == PatternKind::isotropic)
        return 1.0;
    const double c = std::clamp(dot(direction, boresight), -1.0, 1.0);
    if (c < 0.0)
        return pattern.back_floor;
    return std::max(std::pow(c, pattern.exponent), pattern.back_floor);
}

std::string to_string(PatternKind kind)
{
    return kind == PatternKind::patch ? "patch" : "isotropic";
}

PatternKind pattern_kind_from_string(const std::string &s)
{
    if (s == "isotropic")
        return PatternKind::isotropic;
    if (s == "patch")
        return PatternKind::patch;
    throw ConfigError("unknown antenna pattern kind '" + s + "'");
}

} // namespace pla
