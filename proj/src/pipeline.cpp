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

#include "pla/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>
#include <tuple>

#include <openssl/evp.h>

#include "pla/errors.hpp"
#include "pla/geometry.hpp"
#include "pla/parallel.hpp"

namespace pla
{

namespace fs = std::filesystem;
using io::json;

namespace
{

template <typename T>
T get_or(const json &j, const char *key, T fallback)
{
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

void log_line(const PipelineOptions &opts, const std::string &msg)
{
    if (opts.log)
        *opts.log << msg << '\n';
}

std::vector<double> axis_from_json(const json &j, bool angle)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("grid axis must be [first, last, count], got " + j.dump());
    const double s = angle ? deg2rad(1.0) : 1.0;
    return linspace(j[0].get<double>() * s, j[1].get<double>() * s, j[2].get<std::size_t>());
}

json axis_to_json(const std::vector<double> &axis, bool angle)
{
    const double s = angle ? rad2deg(1.0) : 1.0;
    return json::array({axis.front() * s, axis.back() * s, axis.size()});
}

void check_band(const std::string &what, double center, double bandwidth)
{
    if (!(bandwidth >= 0.0) || center - 0.5 * bandwidth < system_band_min_hz - 1.0 ||
        center + 0.5 * bandwidth > system_band_max_hz + 1.0)
        throw ConfigError(what + " [" + std::to_string((center - 0.5 * bandwidth) * 1e-9) + ", " +
                          std::to_string((center + 0.5 * bandwidth) * 1e-9) + "] GHz leaves the 3-10 GHz system range");
}

std::string file_label(std::string s)
{
    for (auto &c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
            c = '_';
    return s;
}

void require(const fs::path &file, Stage consumer, Stage producer)
{
    if (!fs::exists(file))
        throw DependencyError("stage '" + to_string(consumer) + "' needs " + file.filename().string() +
                              " from stage '" + to_string(producer) + "'; run '" + to_string(producer) +
                              "' first (missing " + file.string() + ")");
}

void check_tensor_matches(const ChannelTensor &t, const ArrayGeometry &arr)
{
    if (t.element_positions.size() != arr.size())
        throw InvariantError("channel tensor has " + std::to_string(t.element_positions.size()) +
                             " elements but the array config has " + std::to_string(arr.size()));
    for (std::size_t m = 0; m < arr.size(); ++m)
        if (distance(t.element_positions[m], arr.element_positions[m]) > 1e-9)
            throw InvariantError("channel tensor element " + std::to_string(m) +
                                 " does not match the array config position");
}

std::vector<std::string> run_synth(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    const auto env = io::load_environment(cfg.environment);
    const Scene scene(env);
    const auto arr = cfg.array.build();
    const auto freqs = make_band(cfg.band.center_hz, cfg.band.bandwidth_hz, cfg.band.count);

    SynthesisOptions so;
    so.max_order = cfg.max_order;
    so.snr_db = cfg.snr_db;
    so.noise_var = cfg.noise_var;
    so.seed = *cfg.seed;
    so.tx = {cfg.tx_pattern, cfg.tx_boresight};
    so.rx_pattern = cfg.array.pattern;
    so.scenario = cfg.name;
    so.jobs = opts.jobs;
    if (cfg.diffuse.enabled)
    {
        so.diffuse.enabled = true;
        so.diffuse.onset = cfg.diffuse.onset_s.value_or(distance(cfg.ue, arr.centroid()) / speed_of_light);
        so.diffuse.power = std::pow(10.0, cfg.diffuse.power_db / 10.0);
        so.diffuse.decay = cfg.diffuse.decay_s;
    }
    const auto res = synthesize(scene, cfg.ue, arr, freqs, so);
    io::save_tensor(opts.out_dir / artifact::tensor, res.tensor);

    json comps = json::array();
    for (const auto &c : res.components)
    {
        const auto visible = std::count(c.visible.begin(), c.visible.end(), std::uint8_t{1});
        double peak = 0.0;
        for (std::size_t m = 0; m < c.visible.size(); ++m)
            if (c.visible[m])
                peak = std::max(peak, std::abs(c.amplitude[m]));
        comps.push_back({{"component_id", c.component_id}, {"visible_elements", visible}, {"max_abs_amplitude", peak}});
    }
    io::write_text_file(opts.out_dir / artifact::components,
                        json{{"noise_var", res.noise_var},
                             {"snr_db", snr_db(res.noise_free, res.noise_var)},
                             {"components", comps}}
                                .dump(1) +
                            "\n");
    std::ostringstream msg;
    msg << "synth: " << arr.size() << " elements x " << freqs.count << " frequencies, " << res.components.size()
        << " specular components, noise_var " << res.noise_var;
    log_line(opts, msg.str());
    return {artifact::tensor, artifact::components};
}

std::vector<std::string> run_visibility(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    const auto env = io::load_environment(cfg.environment);
    const Scene scene(env);
    const auto arr = cfg.array.build();
    const auto sources = compute_image_sources(scene, cfg.ue, cfg.max_order);
    const auto mask = visibility_mask(scene, arr.element_positions, sources, opts.jobs);
    io::write_text_file(opts.out_dir / artifact::visibility, io::to_json(mask).dump(1) + "\n");
    log_line(opts, "visibility: " + std::to_string(mask.size()) + " components");
    return {artifact::visibility};
}

std::vector<std::string> run_beamform(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    require(opts.out_dir / artifact::tensor, Stage::beamform, Stage::synth);
    const auto tensor = io::load_tensor(opts.out_dir / artifact::tensor);
    const auto arr = cfg.array.build();
    check_tensor_matches(tensor, arr);

    const auto spec = spherical_spectrum(tensor, arr, cfg.beamform.grid, opts.jobs);
    const auto marg = marginals(spec);
    const std::vector<std::tuple<std::string, const Marginal *, std::string, bool, std::string, bool>> outputs = {
        {"beam_az_el.csv", &marg.az_el, "azimuth_deg", true, "elevation_deg", true},
        {"beam_az_dist.csv", &marg.az_dist, "azimuth_deg", true, "distance_m", false},
        {"beam_el_dist.csv", &marg.el_dist, "elevation_deg", true, "distance_m", false}};
    std::vector<std::string> files;
    for (const auto &[name, m, rn, ra, cn, ca] : outputs)
    {
        std::ostringstream os;
        io::write_marginal_csv(os, *m, rn, ra, cn, ca, true);
        io::write_text_file(opts.out_dir / name, os.str());
        files.push_back(name);
    }

    const auto peaks = find_peaks(spec, cfg.beamform.peaks_db_below_max, cfg.beamform.max_peaks);
    json jp = json::array();
    const double top = peaks.empty() ? 0.0 : peaks.front().power;
    for (const auto &p : peaks)
        jp.push_back({{"azimuth_deg", rad2deg(p.azimuth)},
                      {"elevation_deg", rad2deg(p.elevation)},
                      {"distance_m", p.distance},
                      {"power", p.power},
                      {"relative_db", top > 0.0 ? 10.0 * std::log10(p.power / top) : 0.0}});
    io::write_text_file(opts.out_dir / artifact::beam_peaks, json{{"peaks", jp}}.dump(1) + "\n");
    files.insert(files.begin(), artifact::beam_peaks);
    log_line(opts, "beamform: " + std::to_string(spec.grid.size()) + " grid nodes, " + std::to_string(peaks.size()) +
                       " peaks");
    return files;
}

std::vector<std::string> run_estimate(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    require(opts.out_dir / artifact::tensor, Stage::estimate, Stage::synth);
    const auto tensor = io::load_tensor(opts.out_dir / artifact::tensor);
    const auto arr = cfg.array.build();
    check_tensor_matches(tensor, arr);
    const auto subs = partition_subarrays(arr, cfg.subarray_size);
    const auto run = estimate_subarrays(tensor, arr, subs, cfg.sbl, opts.jobs);
    io::save_results(opts.out_dir / artifact::estimates, run.results);
    std::size_t total = 0;
    for (const auto &r : run.results)
        total += r.estimates.size();
    log_line(opts, "estimate: " + std::to_string(run.results.size()) + " subarrays, " + std::to_string(total) +
                       " components, band " + std::to_string(run.band.count) + " frequencies");
    return {artifact::estimates};
}

Gates effective_gates(const ScenarioConfig &cfg)
{
    return cfg.gates ? *cfg.gates : default_gates(cfg.sbl.band_hz);
}

std::vector<std::string> run_associate(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    require(opts.out_dir / artifact::estimates, Stage::associate, Stage::estimate);
    const auto results = io::load_results(opts.out_dir / artifact::estimates);
    const auto env = io::load_environment(cfg.environment);
    const Scene scene(env);
    const auto arr = cfg.array.build();
    const auto subs = partition_subarrays(arr, cfg.subarray_size);
    if (results.size() != subs.size())
        throw InvariantError("estimates cover " + std::to_string(results.size()) + " subarrays, the config defines " +
                             std::to_string(subs.size()));
    const auto sources = compute_image_sources(scene, cfg.ue, cfg.max_order);
    const Gates gates = effective_gates(cfg);
    validate(gates);

    std::vector<Association> assoc(results.size());
#pragma omp parallel for schedule(dynamic) num_threads(resolve_jobs(opts.jobs))
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(results.size()); ++i)
    {
        const auto &r = results[static_cast<std::size_t>(i)];
        const auto pred = predict(scene, subs[static_cast<std::size_t>(r.subarray_index)], arr, sources);
        assoc[static_cast<std::size_t>(i)] = associate(r.estimates, pred, gates);
        assoc[static_cast<std::size_t>(i)].subarray_index = r.subarray_index;
    }
    io::save_associations(opts.out_dir / artifact::associations, assoc);

    std::vector<std::string> files{artifact::associations};
    const auto maps = visibility_and_amplitude_maps(results, assoc, arr, subs, cfg.compensate_pathloss);
    for (const auto &[id, map] : maps)
    {
        std::ostringstream os;
        io::write_amplitude_map_csv(os, map);
        const std::string name = "amplitude_" + file_label(id) + ".csv";
        io::write_text_file(opts.out_dir / name, os.str());
        files.push_back(name);
    }
    log_line(opts, "associate: " + std::to_string(maps.size()) + " component maps");
    return files;
}

std::vector<std::string> run_report(const ScenarioConfig &cfg, const PipelineOptions &opts)
{
    require(opts.out_dir / artifact::estimates, Stage::report, Stage::estimate);
    require(opts.out_dir / artifact::associations, Stage::report, Stage::associate);
    require(opts.out_dir / artifact::visibility, Stage::report, Stage::visibility);
    const auto results = io::load_results(opts.out_dir / artifact::estimates);
    const auto assoc = io::load_associations(opts.out_dir / artifact::associations);
    const auto mask = io::visibility_from_json(io::read_json_file(opts.out_dir / artifact::visibility));
    const auto arr = cfg.array.build();
    const auto subs = partition_subarrays(arr, cfg.subarray_size);

    const auto report = energy_report(results, assoc, cfg.top_k);
    {
        std::ostringstream os;
        io::write_energy_report_csv(os, report);
        io::write_text_file(opts.out_dir / artifact::energy_csv, os.str());
    }

    std::ostringstream txt;
    txt << "scenario " << cfg.name << ", seed " << *cfg.seed << "\n\n" << io::format_energy_table(report);
    const auto maps = visibility_and_amplitude_maps(results, assoc, arr, subs, cfg.compensate_pathloss);
    txt << "\nvisibility mismatch (geometric vs estimated presence per subarray)\n";
    for (const auto &[id, flags] : mask)
    {
        const auto it = maps.find(id);
        if (it == maps.end() || flags.size() != arr.size())
            continue;
        const auto geo = subarray_visibility(id, flags, subs);
        const auto visible_tiles = std::count(geo.cells.begin(), geo.cells.end(), std::uint8_t{1});
        txt << "  " << std::left << std::setw(24) << id << std::right << std::fixed << std::setprecision(3)
            << mismatch_score(geo, it->second) << "  (" << visible_tiles << "/" << geo.cells.size()
            << " subarrays visible)\n";
    }
    io::write_text_file(opts.out_dir / artifact::report_txt, txt.str());
    if (opts.log)
        *opts.log << txt.str();
    return {artifact::energy_csv, artifact::report_txt};
}

} // namespace

const std::vector<UEPreset> &ue_presets()
{
    static const std::vector<UEPreset> presets = {
        {"M1", 1.546}, {"M2", 0.895}, {"M3", 2.235}, {"M4", 1.478}, {"M5", 1.202},
        {"L1", 1.145}, {"L2", 1.317}, {"L3", 1.162}, {"L4", 1.590}, {"L5", 1.592}};
    return presets;
}

double ue_preset_height(const std::string &name)
{
    for (const auto &p : ue_presets())
        if (p.name == name)
            return p.height;
    throw ConfigError("unknown UE preset '" + name + "' (expected M1-M5 or L1-L5)");
}

ScenarioConfig scenario_from_json(const json &j, const fs::path &base_dir)
{
    ScenarioConfig cfg;
    try
    {
        cfg.name = get_or<std::string>(j, "name", cfg.name);
        fs::path env = j.at("environment").get<std::string>();
        cfg.environment = env.is_absolute() ? env : base_dir / env;

        const auto &ue = j.at("ue");
        if (ue.is_array())
            cfg.ue = io::vec3_from_json(ue);
        else
        {
            const auto xy = ue.at("xy");
            if (!xy.is_array() || xy.size() != 2)
                throw ConfigError("ue.xy must be [x, y]");
            cfg.ue = {xy[0].get<double>(), xy[1].get<double>(), ue_preset_height(ue.at("preset").get<std::string>())};
        }

        cfg.array = io::array_config_from_json(j.at("array"));

        if (const auto it = j.find("band"); it != j.end())
        {
            cfg.band.center_hz = it->at("center_hz").get<double>();
            cfg.band.bandwidth_hz = it->at("bandwidth_hz").get<double>();
            cfg.band.count = it->at("count").get<std::size_t>();
        }

        if (const auto it = j.find("synthesis"); it != j.end())
        {
            const auto &s = *it;
            cfg.max_order = get_or<int>(s, "max_order", cfg.max_order);
            if (s.contains("snr_db") && !s.at("snr_db").is_null())
                cfg.snr_db = s.at("snr_db").get<double>();
            else
                cfg.snr_db.reset();
            cfg.noise_var = get_or<double>(s, "noise_var", cfg.noise_var);
            if (const auto t = s.find("tx_pattern"); t != s.end())
                cfg.tx_pattern = io::pattern_from_json(*t);
            if (const auto t = s.find("tx_boresight"); t != s.end())
                cfg.tx_boresight = io::vec3_from_json(*t);
            if (const auto d = s.find("diffuse"); d != s.end())
            {
                cfg.diffuse.enabled = get_or<bool>(*d, "enabled", true);
                if (const auto o = d->find("onset_ns"); o != d->end())
                    cfg.diffuse.onset_s = o->get<double>() * 1e-9;
                cfg.diffuse.power_db = get_or<double>(*d, "power_db", cfg.diffuse.power_db);
                cfg.diffuse.decay_s = get_or<double>(*d, "decay_ns", cfg.diffuse.decay_s * 1e9) * 1e-9;
            }
        }

        if (const auto it = j.find("beamform"); it != j.end())
        {
            cfg.beamform.grid.azimuths = axis_from_json(it->at("azimuth_deg"), true);
            cfg.beamform.grid.elevations = axis_from_json(it->at("elevation_deg"), true);
            cfg.beamform.grid.distances = axis_from_json(it->at("distance_m"), false);
            cfg.beamform.peaks_db_below_max = get_or<double>(*it, "peaks_db_below_max", cfg.beamform.peaks_db_below_max);
            cfg.beamform.max_peaks = get_or<std::size_t>(*it, "max_peaks", cfg.beamform.max_peaks);
        }
        else
        {
            cfg.beamform.grid = {linspace(deg2rad(-80.0), deg2rad(80.0), 33), linspace(deg2rad(-60.0), deg2rad(60.0), 25),
                                 linspace(1.0, 6.0, 11)};
        }

        if (const auto it = j.find("sbl"); it != j.end())
        {
            auto &b = cfg.sbl;
            const auto &s = *it;
            b.max_components = get_or<int>(s, "max_components", b.max_components);
            b.band_hz = get_or<double>(s, "band_hz", b.band_hz);
            b.convergence_tol = get_or<double>(s, "convergence_tol", b.convergence_tol);
            b.max_iters = get_or<int>(s, "max_iters", b.max_iters);
            b.max_inner_iters = get_or<int>(s, "max_inner_iters", b.max_inner_iters);
            b.prune_threshold_db = get_or<double>(s, "prune_threshold_db", b.prune_threshold_db);
            b.delay_oversampling = get_or<int>(s, "delay_oversampling", b.delay_oversampling);
            b.angle_step = deg2rad(get_or<double>(s, "angle_step_deg", rad2deg(b.angle_step)));
            b.refine_rounds = get_or<int>(s, "refine_rounds", b.refine_rounds);
            b.golden_iters = get_or<int>(s, "golden_iters", b.golden_iters);
            b.polish_each_iteration = get_or<bool>(s, "polish_each_iteration", b.polish_each_iteration);
            b.max_polish_sweeps = get_or<int>(s, "max_polish_sweeps", b.max_polish_sweeps);
            b.final_polish_sweeps = get_or<int>(s, "final_polish_sweeps", b.final_polish_sweeps);
            b.noise_floor_rel = get_or<double>(s, "noise_floor_rel", b.noise_floor_rel);
            cfg.subarray_size = get_or<int>(s, "subarray_size", cfg.subarray_size);
        }

        if (const auto it = j.find("gates"); it != j.end())
        {
            Gates g = default_gates(cfg.sbl.band_hz);
            if (const auto d = it->find("delay_ns"); d != it->end())
                g.delay = d->get<double>() * 1e-9;
            g.azimuth = deg2rad(get_or<double>(*it, "azimuth_deg", rad2deg(g.azimuth)));
            g.elevation = deg2rad(get_or<double>(*it, "elevation_deg", rad2deg(g.elevation)));
            cfg.gates = g;
        }

        if (const auto it = j.find("report"); it != j.end())
        {
            cfg.top_k = get_or<std::size_t>(*it, "top_k", cfg.top_k);
            cfg.compensate_pathloss = get_or<bool>(*it, "compensate_pathloss", cfg.compensate_pathloss);
        }

        if (const auto it = j.find("seed"); it != j.end() && !it->is_null())
            cfg.seed = it->get<std::uint64_t>();
    }
    catch (const json::exception &e)
    {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return cfg;
}

ScenarioConfig load_scenario(const fs::path &path)
{
    return scenario_from_json(io::read_json_file(path), path.parent_path());
}

json to_json(const ScenarioConfig &cfg)
{
    json j;
    j["name"] = cfg.name;
    j["environment"] = cfg.environment.string();
    j["ue"] = io::to_json(cfg.ue);
    j["array"] = io::to_json(cfg.array);
    j["band"] = {{"center_hz", cfg.band.center_hz}, {"bandwidth_hz", cfg.band.bandwidth_hz}, {"count", cfg.band.count}};
    json synth = {{"max_order", cfg.max_order},
                  {"noise_var", cfg.noise_var},
                  {"tx_pattern", io::to_json(cfg.tx_pattern)},
                  {"tx_boresight", io::to_json(cfg.tx_boresight)}};
    synth["snr_db"] = cfg.snr_db ? json(*cfg.snr_db) : json(nullptr);
    json diffuse = {{"enabled", cfg.diffuse.enabled},
                    {"power_db", cfg.diffuse.power_db},
                    {"decay_ns", cfg.diffuse.decay_s * 1e9}};
    if (cfg.diffuse.onset_s)
        diffuse["onset_ns"] = *cfg.diffuse.onset_s * 1e9;
    synth["diffuse"] = diffuse;
    j["synthesis"] = synth;
    j["beamform"] = {{"azimuth_deg", axis_to_json(cfg.beamform.grid.azimuths, true)},
                     {"elevation_deg", axis_to_json(cfg.beamform.grid.elevations, true)},
                     {"distance_m", axis_to_json(cfg.beamform.grid.distances, false)},
                     {"peaks_db_below_max", cfg.beamform.peaks_db_below_max},
                     {"max_peaks", cfg.beamform.max_peaks}};
    const auto &b = cfg.sbl;
    j["sbl"] = {{"max_components", b.max_components},
                {"band_hz", b.band_hz},
                {"convergence_tol", b.convergence_tol},
                {"max_iters", b.max_iters},
                {"max_inner_iters", b.max_inner_iters},
                {"prune_threshold_db", b.prune_threshold_db},
                {"delay_oversampling", b.delay_oversampling},
                {"angle_step_deg", rad2deg(b.angle_step)},
                {"refine_rounds", b.refine_rounds},
                {"golden_iters", b.golden_iters},
                {"polish_each_iteration", b.polish_each_iteration},
                {"max_polish_sweeps", b.max_polish_sweeps},
                {"final_polish_sweeps", b.final_polish_sweeps},
                {"noise_floor_rel", b.noise_floor_rel},
                {"subarray_size", cfg.subarray_size}};
    const Gates g = effective_gates(cfg);
    j["gates"] = {{"delay_ns", g.delay * 1e9}, {"azimuth_deg", rad2deg(g.azimuth)}, {"elevation_deg", rad2deg(g.elevation)}};
    j["report"] = {{"top_k", cfg.top_k}, {"compensate_pathloss", cfg.compensate_pathloss}};
    j["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    return j;
}

void validate(const ScenarioConfig &cfg)
{
    if (!fs::exists(cfg.environment))
        throw ConfigError("environment file '" + cfg.environment.string() + "' does not exist");
    if (cfg.band.count < 2)
        throw ConfigError("synthesis band needs at least 2 frequencies");
    if (!(cfg.band.bandwidth_hz > 0.0))
        throw ConfigError("synthesis bandwidth must be positive");
    check_band("synthesis band", cfg.band.center_hz, cfg.band.bandwidth_hz);
    check_band("array carrier", cfg.array.f_c_hz, 0.0);
    check_band("estimation band", cfg.band.center_hz, cfg.sbl.band_hz);
    if (cfg.sbl.band_hz > cfg.band.bandwidth_hz * (1.0 + 1e-9))
        throw ConfigError("estimation band exceeds the synthesis band");
    if (cfg.max_order < 0 || cfg.max_order > 2)
        throw ConfigError("max_order must be 0, 1 or 2");
    if (!cfg.snr_db && cfg.noise_var < 0.0)
        throw ConfigError("noise_var must be non-negative");
    if (cfg.subarray_size < 1 || cfg.subarray_size > std::min(cfg.array.rows, cfg.array.cols))
        throw ConfigError("subarray_size must lie in [1, min(rows, cols)]");
    validate(cfg.sbl);
    validate(cfg.beamform.grid);
    if (cfg.gates)
        validate(*cfg.gates);
    if (cfg.top_k < 1)
        throw ConfigError("report top_k must be at least 1");
}

const std::vector<Stage> &all_stages()
{
    static const std::vector<Stage> stages = {Stage::synth,    Stage::visibility, Stage::beamform,
                                              Stage::estimate, Stage::associate,  Stage::report};
    return stages;
}

std::string to_string(Stage s)
{
    switch (s)
    {
    case Stage::synth:
        return "synth";
    case Stage::visibility:
        return "visibility";
    case Stage::beamform:
        return "beamform";
    case Stage::estimate:
        return "estimate";
    case Stage::associate:
        return "associate";
    case Stage::report:
        return "report";
    }
    return "?";
}

Stage stage_from_string(const std::string &s)
{
    for (const Stage st : all_stages())
        if (to_string(st) == s)
            return st;
    throw ConfigError("unknown stage '" + s + "' (expected synth, visibility, beamform, estimate, associate, report)");
}

std::string sha256_hex(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 initialisation failed");
    std::array<char, 1 << 16> buf{};
    while (in)
    {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0)
            EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i)
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

json run_pipeline(const ScenarioConfig &cfg, std::vector<Stage> stages, const PipelineOptions &opts)
{
    validate(cfg);
    if (!cfg.seed)
        throw ConfigError("a seed is required (scenario 'seed' or --seed)");
    fs::create_directories(opts.out_dir);

    std::sort(stages.begin(), stages.end());
    stages.erase(std::unique(stages.begin(), stages.end()), stages.end());

    const fs::path manifest_path = opts.out_dir / artifact::manifest;
    json manifest = {{"scenario", cfg.name}, {"seed", *cfg.seed}, {"stages", json::object()}};
    if (fs::exists(manifest_path))
    {
        const json old = io::read_json_file(manifest_path);
        if (old.contains("stages") && old.value("scenario", "") == cfg.name && old.value("seed", 0ULL) == *cfg.seed)
            manifest["stages"] = old["stages"];
    }

    for (const Stage s : stages)
    {
        std::vector<std::string> files;
        switch (s)
        {
        case Stage::synth:
            files = run_synth(cfg, opts);
            break;
        case Stage::visibility:
            files = run_visibility(cfg, opts);
            break;
        case Stage::beamform:
            files = run_beamform(cfg, opts);
            break;
        case Stage::estimate:
            files = run_estimate(cfg, opts);
            break;
        case Stage::associate:
            files = run_associate(cfg, opts);
            break;
        case Stage::report:
            files = run_report(cfg, opts);
            break;
        }
        json entries = json::array();
        for (const auto &f : files)
            entries.push_back({{"path", f}, {"sha256", sha256_hex(opts.out_dir / f)}});
        manifest["stages"][to_string(s)] = entries;
    }

    io::write_text_file(manifest_path, manifest.dump(2) + "\n");
    return manifest;
}

} // namespace pla
