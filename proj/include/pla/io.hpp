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

#ifndef PLA_IO_HPP
#define PLA_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pla/array.hpp"
#include "pla/association.hpp"
#include "pla/beamformer.hpp"
#include "pla/channel.hpp"
#include "pla/geometry.hpp"
#include "pla/sbl.hpp"

// File formats. Lengths are meters, frequencies Hz, delays seconds.
// Angles are degrees in every file and radians in memory.

namespace pla::io
{

using json = nlohmann::json;
namespace fs = std::filesystem;

json read_json_file(const fs::path &path);
void write_text_file(const fs::path &path, const std::string &text);

// Environment: {name, facets: [{id, name, vertices: [[x,y,z], ...], reflection_coeff: {re, im}}]}
EnvironmentModel environment_from_json(const json &j);
json to_json(const EnvironmentModel &env);
EnvironmentModel load_environment(const fs::path &path); // validated
void save_environment(const fs::path &path, const EnvironmentModel &env);

// Array: {rows, cols, f_c_hz, origin: [x,y,z], boresight: [x,y,z], pattern: {kind, q, back_floor}}
struct ArrayConfig
{
    int rows = 1;
    int cols = 1;
    double f_c_hz = 6.95e9;
    Vec3 origin;
    Vec3 boresight{1.0, 0.0, 0.0};
    AntennaPattern pattern{PatternKind::patch, 2.0, 0.0};

    ArrayGeometry build() const;
};
ArrayConfig array_config_from_json(const json &j);
json to_json(const ArrayConfig &cfg);
AntennaPattern pattern_from_json(const json &j);
json to_json(const AntennaPattern &p);

Vec3 vec3_from_json(const json &j);
json to_json(const Vec3 &v);

// Channel tensor: one line of JSON header, then count * elements * 2 little-endian float64
// values (re, im), element-major then frequency.
void save_tensor(const fs::path &path, const ChannelTensor &tensor);
ChannelTensor load_tensor(const fs::path &path);
void write_tensor(std::ostream &os, const ChannelTensor &tensor);
ChannelTensor read_tensor(std::istream &is);

// SBL results: JSON lines, one subarray per line
json to_json(const SubarrayResult &r);
SubarrayResult subarray_result_from_json(const json &j);
void save_results(const fs::path &path, const std::vector<SubarrayResult> &results);
std::vector<SubarrayResult> load_results(const fs::path &path);

json to_json(const Association &a);
Association association_from_json(const json &j);
void save_associations(const fs::path &path, const std::vector<Association> &assoc);
std::vector<Association> load_associations(const fs::path &path);

// Visibility: {elements, components: {id: "0101..."}}
json to_json(const VisibilityMask &mask);
VisibilityMask visibility_from_json(const json &j);

// Marginal CSV: header row of column-axis values, then one row per row-axis value.
// Angles in degrees; in_db writes 10 log10(p / max).
void write_marginal_csv(std::ostream &os, const Marginal &m, const std::string &row_name, bool row_is_angle,
                        const std::string &col_name, bool col_is_angle, bool in_db);

// Amplitude map CSV: tile rows x tile cols, blank cell where the component was not found
void write_amplitude_map_csv(std::ostream &os, const AmplitudeMap &map);

void write_energy_report_csv(std::ostream &os, const EnergyReport &report);
std::string format_energy_table(const EnergyReport &report);

} // namespace pla::io

#endif
