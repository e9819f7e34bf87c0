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

#ifndef PLA_VEC3_HPP
#define PLA_VEC3_HPP

#include <cmath>
#include <complex>
#include <numbers>

namespace pla
{

inline constexpr double speed_of_light = 299792458.0; // m/s
inline constexpr double two_pi = 2.0 * std::numbers::pi;

using cdouble = std::complex<double>;

struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3 operator+(const Vec3 &r) const { return {x + r.x, y + r.y, z + r.z}; }
    constexpr Vec3 operator-(const Vec3 &r) const { return {x - r.x, y - r.y, z - r.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    friend constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }

    Vec3 &operator+=(const Vec3 &r)
    {
        x += r.x, y += r.y, z += r.z;
        return *this;
    }
    Vec3 &operator-=(const Vec3 &r)
    {
        x -= r.x, y -= r.y, z -= r.z;
        return *this;
    }

    constexpr bool operator==(const Vec3 &) const = default;
};

constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3 &a, const Vec3 &b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

// Returns the zero vector for inputs shorter than eps
inline Vec3 normalized(const Vec3 &v, double eps = 1e-300)
{
    const double n = norm(v);
    return n > eps ? v / n : Vec3{};
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

} // namespace pla

#endif
