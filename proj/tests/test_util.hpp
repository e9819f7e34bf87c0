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

#ifndef PLA_TEST_UTIL_HPP
#define PLA_TEST_UTIL_HPP

#include <random>
#include <string>

#include "pla/geometry.hpp"

namespace pla::test
{

// Axis-aligned rectangle with the fixed coordinate on axis (0 = x, 1 = y, 2 = z)
inline Facet rect(const std::string &id, int axis, double at, double a0, double a1, double b0, double b1,
                  cdouble gamma = -0.7)
{
    const int u = axis == 0 ? 1 : 0;
    const int v = axis == 2 ? 1 : 2;
    Facet f;
    f.id = id;
    f.name = id;
    f.reflection_coeff = gamma;
    const double corners[4][2] = {{a0, b0}, {a1, b0}, {a1, b1}, {a0, b1}};
    for (const auto &c : corners)
    {
        double p[3] = {0.0, 0.0, 0.0};
        p[axis] = at;
        p[u] = c[0];
        p[v] = c[1];
        f.vertices.push_back({p[0], p[1], p[2]});
    }
    return f;
}

inline Vec3 random_point(std::mt19937_64 &rng, double lo, double hi)
{
    std::uniform_real_distribution<double> d(lo, hi);
    return {d(rng), d(rng), d(rng)};
}

inline std::string data_path(const std::string &rel)
{
    return std::string(PLASIM_DATA_DIR) + "/" + rel;
}

} // namespace pla::test

#endif
