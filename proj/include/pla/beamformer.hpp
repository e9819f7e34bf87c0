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

#ifndef PLA_BEAMFORMER_HPP
#define PLA_BEAMFORMER_HPP

#include <cstddef>
#include <vector>

#include "pla/array.hpp"
#include "pla/channel.hpp"

namespace pla
{

// Focus points in the array-local frame around the array centroid; angles in rad, distances in m
struct SpectrumGrid
{
    std::vector<double> azimuths;
    std::vector<double> elevations;
    std::vector<double> distances;

    std::size_t size() const { return azimuths.size() * elevations.size() * distances.size(); }
};

// Throws ConfigError unless every axis is non-empty and strictly increasing
void validate(const SpectrumGrid &grid);

// count values from first to last inclusive
std::vector<double> linspace(double first, double last, std::size_t count);

// Linear power stored azimuth-major: index (i * n_el + j) * n_dist + k
struct BeamSpectrum
{
    SpectrumGrid grid;
    std::vector<double> power;

    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const
    {
        return (i * grid.elevations.size() + j) * grid.distances.size() + k;
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const { return power[index(i, j, k)]; }
};

// Global position of a grid node
Vec3 focus_point(const ArrayGeometry &arr, double azimuth, double elevation, double dist);

// |sum_{m,n} H_mn conj(S_mn(p))|^2 / (M N)^2 for every node p, parallel over nodes
BeamSpectrum spherical_spectrum(const ChannelTensor &tensor, const ArrayGeometry &arr, const SpectrumGrid &grid,
                                int jobs = 0);

// Row-major 2-D map; rows follow the first named axis
struct Marginal
{
    std::vector<double> row_axis;
    std::vector<double> col_axis;
    std::vector<double> values;

    double at(std::size_t r, std::size_t c) const { return values[r * col_axis.size() + c]; }
};

struct Marginals
{
    Marginal az_el;
    Marginal az_dist;
    Marginal el_dist;
};

// Max-projection along the collapsed axis
Marginals marginals(const BeamSpectrum &spec);

struct Peak
{
    std::size_t az_index = 0;
    std::size_t el_index = 0;
    std::size_t dist_index = 0;
    double azimuth = 0.0;
    double elevation = 0.0;
    double distance = 0.0;
    double power = 0.0;
};

// Local maxima over the 26-neighbourhood within min_db_below_max of the global maximum,
// strongest first; equal powers keep grid order (azimuth, elevation, distance).
// On plateaus only the first node in grid order qualifies.
std::vector<Peak> find_peaks(const BeamSpectrum &spec, double min_db_below_max, std::size_t max_peaks);

} // namespace pla

#endif
