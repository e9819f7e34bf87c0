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

#ifndef PLA_ASSOCIATION_HPP
#define PLA_ASSOCIATION_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pla/array.hpp"
#include "pla/geometry.hpp"
#include "pla/sbl.hpp"

namespace pla
{

// Geometric expectation for one component at a subarray centroid
struct Prediction
{
    std::string component_id;
    double delay = 0.0;     // s
    double azimuth = 0.0;   // rad
    double elevation = 0.0; // rad
    double distance = 0.0;  // m
};

struct Gates
{
    double delay = 4e-9;            // s
    double azimuth = 5.0 * std::numbers::pi / 180.0;   // rad
    double elevation = 5.0 * std::numbers::pi / 180.0; // rad
};

// Default gates: 2 / B in delay, 5 degrees in both angles
Gates default_gates(double band_hz);
void validate(const Gates &gates);

std::vector<Prediction> predict(const Scene &scene, const Subarray &sub, const ArrayGeometry &arr,
                                std::span<const ImageSource> sources);

struct Match
{
    std::size_t estimate_index = 0;
    MPCEstimate estimate;
    Prediction prediction;
    double distance = 0.0; // normalized gate distance, <= 1
};

struct Association
{
    int subarray_index = 0;
    std::map<std::string, std::optional<Match>> by_component; // every predicted component appears
    std::vector<std::size_t> unassociated;                   // estimate indices, ascending
};

// max(|d_delay| / g_delay, |d_az| / g_az, |d_el| / g_el), azimuth difference wrapped to [-pi, pi]
double gate_distance(const MPCEstimate &e, const Prediction &p, const Gates &gates);

// Greedy one-to-one assignment in ascending normalized distance; pairs beyond the gates stay unmatched
Association associate(std::span<const MPCEstimate> estimates, std::span<const Prediction> predictions,
                      const Gates &gates);

// Per-subarray |amplitude| of one component; empty cells form the estimated invisibility region
struct AmplitudeMap
{
    std::string component_id;
    TileGrid grid;
    std::vector<std::optional<double>> cells; // row-major over (tile_row, tile_col)

    const std::optional<double> &at(int tile_row, int tile_col) const { return cells[tile_row * grid.cols + tile_col]; }
};

// With compensate_pathloss the amplitude is multiplied by 4 pi f_c d / c using the predicted distance
std::map<std::string, AmplitudeMap> visibility_and_amplitude_maps(std::span<const SubarrayResult> results,
                                                                  std::span<const Association> associations,
                                                                  const ArrayGeometry &arr,
                                                                  std::span<const Subarray> subarrays,
                                                                  bool compensate_pathloss);

// Per-subarray geometric visibility: true if the majority of the subarray's elements see the component
struct SubarrayVisibility
{
    std::string component_id;
    TileGrid grid;
    std::vector<std::uint8_t> cells;
};
SubarrayVisibility subarray_visibility(const std::string &component_id, std::span<const std::uint8_t> element_mask,
                                       std::span<const Subarray> subarrays);

// Fraction of subarrays where geometric visibility and estimated presence disagree
double mismatch_score(const SubarrayVisibility &geometric, const AmplitudeMap &estimated);

struct EnergyRow
{
    std::string label;
    double mean_pct = 0.0;
    double std_pct = 0.0;
};

struct EnergyReport
{
    std::vector<EnergyRow> components; // strongest top_k by mean
    EnergyRow residual{"residual"};
    EnergyRow captured{"total estimated"};
    int n_subarrays = 0;
    int overflow_subarrays = 0; // captured fraction clipped at 100 % (correlated estimates)
};

EnergyReport energy_report(std::span<const SubarrayResult> results, std::span<const Association> associations,
                           std::size_t top_k = 6);

} // namespace pla

#endif
