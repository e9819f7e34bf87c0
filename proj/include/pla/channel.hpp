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

#ifndef PLA_CHANNEL_HPP
#define PLA_CHANNEL_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pla/array.hpp"
#include "pla/geometry.hpp"

namespace pla
{

// Uniform frequency grid f_n = start + n * step
struct FrequencyGrid
{
    double start = 0.0;
    double step = 0.0;
    std::size_t count = 0;

    double at(std::size_t n) const { return start + static_cast<double>(n) * step; }
    double bandwidth() const { return count > 1 ? step * static_cast<double>(count - 1) : 0.0; }
    double center() const { return start + 0.5 * bandwidth(); }
    std::vector<double> values() const;
};

// count points spanning [center - bandwidth/2, center + bandwidth/2]
FrequencyGrid make_band(double center, double bandwidth, std::size_t count);

// Contiguous sub-grid covering [center - bandwidth/2, center + bandwidth/2]; first index in *offset
FrequencyGrid select_band(const FrequencyGrid &grid, double center, double bandwidth, std::size_t *offset = nullptr);

struct ChannelMetadata
{
    double f_c = 0.0;
    double bandwidth = 0.0;
    std::string scenario;
    std::uint64_t seed = 0;
};

// Frequency response per array element, the synthetic stand-in for a VNA measurement
struct ChannelTensor
{
    FrequencyGrid freqs;
    CMatrix H; // elements x frequencies
    std::vector<Vec3> element_positions;
    ChannelMetadata metadata;
};

// Throws InvariantError on inconsistent dimensions or a non-uniform grid
void validate(const ChannelTensor &tensor);

struct SyntheticComponent
{
    std::string component_id;
    std::vector<std::uint8_t> visible;
    std::vector<double> delay;     // s
    std::vector<double> azimuth;   // rad, array-local
    std::vector<double> elevation; // rad, array-local
    std::vector<cdouble> amplitude;
};

// Stochastic dense multipath with an exponential power-delay profile.
// Taps are spaced by the delay resolution 1 / (N * step); the first tap carries power "power".
struct DiffuseSpec
{
    bool enabled = false;
    double onset = 0.0;  // s
    double power = 0.0;  // linear, first tap
    double decay = 1e-8; // s
};

struct Antenna
{
    AntennaPattern pattern;
    Vec3 boresight{1.0, 0.0, 0.0};
};

struct PathParams
{
    double delay = 0.0;     // s
    double azimuth = 0.0;   // rad, array-local
    double elevation = 0.0; // rad, array-local
    double distance = 0.0;  // m
    Vec3 doa;               // global unit vector from the element towards the last interaction
    Vec3 dod;               // global unit vector leaving the UE
};

PathParams path_params(const SpecularPath &path, const ArrayFrame &frame);

// Free-space amplitude with reflection losses and both antenna gains, evaluated at f_c
cdouble amplitude(const ImageSource &src, double distance, const Vec3 &doa, const Vec3 &dod, double f_c,
                  const Antenna &tx, const Antenna &rx);

struct SynthesisOptions
{
    int max_order = 1;
    DiffuseSpec diffuse;
    double noise_var = 0.0;
    std::optional<double> snr_db; // if set, overrides noise_var relative to the mean specular+diffuse power
    std::uint64_t seed = 0;
    Antenna tx;
    AntennaPattern rx_pattern; // boresight follows the array
    std::string scenario;
    int jobs = 0;
};

struct SynthesisResult
{
    ChannelTensor tensor;
    CMatrix noise_free; // specular + diffuse part of tensor.H
    std::vector<SyntheticComponent> components;
    VisibilityMask visibility;
    double noise_var = 0.0;
};

SynthesisResult synthesize(const Scene &scene, const Vec3 &ue, const ArrayGeometry &arr, const FrequencyGrid &freqs,
                           const SynthesisOptions &opts);

// Specular sum for given per-element components (no diffuse, no noise)
CMatrix specular_response(std::span<const SyntheticComponent> components, const FrequencyGrid &freqs,
                          std::size_t elements, int jobs = 0);

// Adds circular complex Gaussian noise; one RNG stream per element so results do not depend on jobs
void add_noise(CMatrix &H, double noise_var, std::uint64_t seed, int jobs = 0);

// Diffuse term with one RNG stream per element
CMatrix diffuse_response(const DiffuseSpec &spec, const FrequencyGrid &freqs, std::size_t elements,
                         std::uint64_t seed, int jobs = 0);

double mean_power(const CMatrix &H);

// 10 log10(mean |signal|^2 / noise_var); +inf for noise_var == 0, -inf for a zero signal
double snr_db(const CMatrix &noise_free, double noise_var);

} // namespace pla

#endif
