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

#ifndef PLA_PIPELINE_HPP
#define PLA_PIPELINE_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pla/association.hpp"
#include "pla/beamformer.hpp"
#include "pla/channel.hpp"
#include "pla/io.hpp"
#include "pla/sbl.hpp"

namespace pla
{

// Declared operating range of the sounder
inline constexpr double system_band_min_hz = 3e9;
inline constexpr double system_band_max_hz = 10e9;

// Named UE heights in m; presets combine with an (x, y) position
struct UEPreset
{
    std::string name;
    double height;
};
const std::vector<UEPreset> &ue_presets();
double ue_preset_height(const std::string &name); // ConfigError for an unknown name

struct BandConfig
{
    double center_hz = 6.5e9;
    double bandwidth_hz = 1e9;
    std::size_t count = 101;
};

struct DiffuseConfig
{
    bool enabled = false;
    std::optional<double> onset_s; // default: LOS delay to the array centroid
    double power_db = -80.0;       // first tap, 10 log10 of linear power
    double decay_s = 10e-9;
};

struct BeamformConfig
{
    SpectrumGrid grid;
    double peaks_db_below_max = 20.0;
    std::size_t max_peaks = 10;
};

struct ScenarioConfig
{
    std::string name = "scenario";
    std::filesystem::path environment;
    Vec3 ue;
    io::ArrayConfig array;
    BandConfig band;
    int max_order = 1;
    DiffuseConfig diffuse;
    std::optional<double> snr_db = 20.0;
    double noise_var = 0.0; // used when snr_db is unset
    AntennaPattern tx_pattern;
    Vec3 tx_boresight{1.0, 0.0, 0.0};
    BeamformConfig beamform;
    SBLConfig sbl;
    int subarray_size = 4;
    std::optional<Gates> gates; // default from the SBL band
    std::size_t top_k = 6;
    bool compensate_pathloss = true;
    std::optional<std::uint64_t> seed;
};

// Relative paths inside the file resolve against the file's directory
ScenarioConfig scenario_from_json(const io::json &j, const std::filesystem::path &base_dir);
ScenarioConfig load_scenario(const std::filesystem::path &path);
io::json to_json(const ScenarioConfig &cfg);

// Throws ConfigError if a referenced file is missing or a band leaves the system range
void validate(const ScenarioConfig &cfg);

enum class Stage
{
    synth,
    visibility,
    beamform,
    estimate,
    associate,
    report
};
const std::vector<Stage> &all_stages();
std::string to_string(Stage s);
Stage stage_from_string(const std::string &s);

// Artifact file names inside the output directory
namespace artifact
{
inline constexpr const char *tensor = "channel.pct";
inline constexpr const char *components = "components.json";
inline constexpr const char *visibility = "visibility.json";
inline constexpr const char *beam_peaks = "beam_peaks.json";
inline constexpr const char *estimates = "estimates.jsonl";
inline constexpr const char *associations = "associations.json";
inline constexpr const char *energy_csv = "energy_report.csv";
inline constexpr const char *report_txt = "report.txt";
inline constexpr const char *manifest = "manifest.json";
} // namespace artifact

struct PipelineOptions
{
    std::filesystem::path out_dir = "out";
    int jobs = 0;
    std::ostream *log = nullptr;
};

// Runs the requested stages in workflow order and rewrites manifest.json.
// Stages not run keep their previous manifest entries. Throws DependencyError if an input artifact is missing.
io::json run_pipeline(const ScenarioConfig &cfg, std::vector<Stage> stages, const PipelineOptions &opts);

std::string sha256_hex(const std::filesystem::path &path);

} // namespace pla

#endif
