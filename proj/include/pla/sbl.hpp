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

#ifndef PLA_SBL_HPP
#define PLA_SBL_HPP

#include <cstddef>
#include <vector>

#include "pla/array.hpp"
#include "pla/channel.hpp"

namespace pla
{

struct SBLConfig
{
    int max_components = 20;       // hard component budget
    double band_hz = 500e6;        // sub-band used for estimation, centered at f_c
    double convergence_tol = 1e-4; // relative change of gamma / noise_var in the re-estimation loop
    int max_iters = 200;           // insertion iterations
    int max_inner_iters = 100;     // re-estimation sweeps per insertion
    double prune_threshold_db = 15.0; // floor on |amplitude|^2 / noise_var (unit-norm atoms)
    int delay_oversampling = 2;    // coarse delay step = 1 / (oversampling * N * step)
    double angle_step = 0.0;       // coarse az/el step in rad; 0 selects 2 / side
    int refine_rounds = 3;         // coordinate-ascent rounds for a new candidate
    int golden_iters = 30;         // golden-section iterations per parameter
    bool polish_each_iteration = true; // refine all components after each insertion
    int max_polish_sweeps = 10;        // until the largest shift is negligible
    int final_polish_sweeps = 2;
    double noise_floor_rel = 1e-5; // noise_var >= noise_floor_rel * mean |Y|^2
};

// Throws ConfigError for out-of-range settings
void validate(const SBLConfig &cfg);

struct MPCEstimate
{
    double delay = 0.0;     // s, at the subarray centroid, in [0, 1 / step)
    double azimuth = 0.0;   // rad, array-local
    double elevation = 0.0; // rad, array-local
    cdouble amplitude{};    // posterior mean, unit-norm atom convention
    double gamma = 0.0;     // prior variance
    double component_snr_db = 0.0;
};

struct SubarrayResult
{
    int subarray_index = 0;
    std::vector<MPCEstimate> estimates; // strongest first
    double noise_var = 0.0;
    double residual_energy_frac = 0.0;
    double total_energy = 0.0;
    std::vector<double> evidence_trace; // log evidence after each accepted iteration
};

// Greedy evidence-maximising estimation of plane-wave components on one subarray.
// Y holds one row per subarray element (in sub.element_indices order) and one column per frequency.
SubarrayResult sbl_estimate(const CMatrix &Y, const Subarray &sub, const ArrayGeometry &arr,
                            const FrequencyGrid &freqs, const SBLConfig &cfg);

// Sum of amplitude * unit-norm atom, shaped like Y
CMatrix reconstruct(const SubarrayResult &result, const Subarray &sub, const ArrayGeometry &arr,
                    const FrequencyGrid &freqs);

// |amplitude_k|^2 / |Y|^2
double component_energy_frac(const SubarrayResult &result, std::size_t k);

// Rows of the tensor for one subarray, restricted to count frequencies from offset
CMatrix extract_subarray(const ChannelTensor &tensor, const Subarray &sub, std::size_t offset, std::size_t count);

struct EstimationRun
{
    FrequencyGrid band; // frequencies actually used
    std::vector<SubarrayResult> results;
};

// Selects cfg.band_hz around the tensor carrier and estimates every subarray, parallel over subarrays
EstimationRun estimate_subarrays(const ChannelTensor &tensor, const ArrayGeometry &arr,
                                 std::span<const Subarray> subarrays, const SBLConfig &cfg, int jobs = 0);

} // namespace pla

#endif
