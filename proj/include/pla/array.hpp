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

#ifndef PLA_ARRAY_HPP
#define PLA_ARRAY_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pla/vec3.hpp"

namespace pla
{

// Element-major complex matrix (one row per array element, one column per frequency)
using CMatrix = Eigen::Matrix<cdouble, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;

// Orthonormal array-local frame: x = boresight, y = horizontal, z = vertical
struct ArrayFrame
{
    Vec3 boresight{1.0, 0.0, 0.0};
    Vec3 horizontal{0.0, 1.0, 0.0};
    Vec3 vertical{0.0, 0.0, 1.0};

    Vec3 to_local(const Vec3 &v) const { return {dot(v, boresight), dot(v, horizontal), dot(v, vertical)}; }
    Vec3 to_global(const Vec3 &v) const { return boresight * v.x + horizontal * v.y + vertical * v.z; }
};

// Frame with the horizontal axis perpendicular to boresight and global z.
// Falls back to global y when the boresight points straight up or down.
ArrayFrame frame_from_boresight(const Vec3 &boresight);

// Uniform rectangular array. Element (r, c) sits at origin + spacing * (r * horizontal + c * vertical)
// and is stored at index r * cols + c, so "rows" counts positions along the horizontal axis.
struct ArrayGeometry
{
    std::vector<Vec3> element_positions;
    int rows = 0;
    int cols = 0;
    double f_c = 0.0;     // Hz
    double spacing = 0.0; // m
    Vec3 origin;
    ArrayFrame frame;

    std::size_t size() const { return element_positions.size(); }
    const Vec3 &boresight() const { return frame.boresight; }
    Vec3 centroid() const;
};

ArrayGeometry make_ura(int rows, int cols, double f_c, const Vec3 &origin, const ArrayFrame &orientation = {});

struct Subarray
{
    int index = 0;
    int tile_row = 0;
    int tile_col = 0;
    std::vector<std::size_t> element_indices;
    Vec3 centroid;
};

// Non-overlapping size x size tiles from the grid origin; incomplete edge tiles are dropped.
// Tiles are numbered row-major over (tile_row, tile_col).
std::vector<Subarray> partition_subarrays(const ArrayGeometry &arr, int size);

struct TileGrid
{
    int rows = 0;
    int cols = 0;
    bool operator==(const TileGrid &) const = default;
};
TileGrid tile_grid(std::span<const Subarray> subarrays);

// Unit vector for azimuth/elevation in the array-local frame
Vec3 local_direction(double azimuth, double elevation);

struct Angles
{
    double azimuth = 0.0;
    double elevation = 0.0;
};
Angles local_angles(const Vec3 &local_direction);

// Unit-norm wideband plane-wave response of a subarray, element-major (index m * N + n).
// The delay refers to the subarray centroid.
CVector plane_wave_atom(const Subarray &sub, const ArrayGeometry &arr, std::span<const double> freqs,
                        double delay, double azimuth, double elevation);

// exp(-j 2 pi f_n |point - p_m| / c) for every element m and frequency n
CMatrix spherical_steering(const ArrayGeometry &arr, const Vec3 &point, std::span<const double> freqs);

enum class PatternKind
{
    isotropic,
    patch
};

struct AntennaPattern
{
    PatternKind kind = PatternKind::isotropic;
    double exponent = 2.0;   // cos^q main lobe, patch only
    double back_floor = 0.0; // linear amplitude floor
};

// Linear amplitude gain. Patch: max(cos^q(theta), back_floor) in the front half-space, back_floor behind.
double antenna_gain(const AntennaPattern &pattern, const Vec3 &direction, const Vec3 &boresight);

std::string to_string(PatternKind kind);
PatternKind pattern_kind_from_string(const std::string &s);

} // namespace pla

#endif
