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

// Command line front end for the processing chain

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pla/errors.hpp"
#include "pla/pipeline.hpp"

namespace
{

struct Overrides
{
    std::string config;
    std::string out_dir = "out";
    std::string env;
    std::vector<double> ue;
    std::string ue_preset;
    std::vector<double> ue_xy;
    std::optional<double> snr_db;
    std::optional<int> max_order;
    std::optional<int> subarray_size;
    std::optional<std::uint64_t> seed;
    int jobs = 0;
    bool quiet = false;
};

void add_common(CLI::App *cmd, Overrides &o)
{
    cmd->add_option("-c,--config", o.config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    cmd->add_option("-o,--out-dir", o.out_dir, "Artifact directory")->capture_default_str();
    cmd->add_option("--env", o.env, "Environment JSON file (overrides the scenario)");
    cmd->add_option("--ue", o.ue, "UE position x y z in m")->expected(3);
    cmd->add_option("--ue-preset", o.ue_preset, "UE height preset M1-M5, L1-L5 (needs --ue-xy)");
    cmd->add_option("--ue-xy", o.ue_xy, "UE x y in m for --ue-preset")->expected(2);
    cmd->add_option("--snr-db", o.snr_db, "Synthesis SNR in dB");
    cmd->add_option("--max-order", o.max_order, "Maximum reflection order (0-2)");
    cmd->add_option("--subarray-size", o.subarray_size, "Square subarray side in elements");
    cmd->add_option("-j,--jobs", o.jobs, "Worker threads, 0 = OpenMP default")->capture_default_str();
    cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress output");
}

pla::ScenarioConfig resolve(const Overrides &o)
{
    auto cfg = pla::load_scenario(o.config);
    if (!o.env.empty())
        cfg.environment = o.env;
    if (!o.ue.empty())
        cfg.ue = {o.ue[0], o.ue[1], o.ue[2]};
    if (!o.ue_preset.empty())
    {
        if (o.ue_xy.size() != 2)
            throw pla::ConfigError("--ue-preset needs --ue-xy");
        cfg.ue = {o.ue_xy[0], o.ue_xy[1], pla::ue_preset_height(o.ue_preset)};
    }
    if (o.snr_db)
        cfg.snr_db = *o.snr_db;
    if (o.max_order)
        cfg.max_order = *o.max_order;
    if (o.subarray_size)
        cfg.subarray_size = *o.subarray_size;
    if (o.seed)
        cfg.seed = *o.seed;
    return cfg;
}

std::vector<pla::Stage> parse_stages(const std::string &list)
{
    std::vector<pla::Stage> stages;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            stages.push_back(pla::stage_from_string(item));
    if (stages.empty())
        throw pla::ConfigError("--stages is empty");
    return stages;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"plasim - channel synthesis and multipath analysis for physically large arrays"};
    app.require_subcommand(1);

    Overrides o;
    std::string stage_list = "synth,visibility,beamform,estimate,associate,report";
    std::vector<std::pair<CLI::App *, pla::Stage>> single;
    for (const pla::Stage s : pla::all_stages())
    {
        const std::string name = pla::to_string(s);
        auto *cmd = app.add_subcommand(name, "Run the " + name + " stage");
        add_common(cmd, o);
        auto *seed = cmd->add_option("-s,--seed", o.seed, "Random seed");
        if (s == pla::Stage::synth)
            seed->required();
        single.emplace_back(cmd, s);
    }
    auto *pipeline = app.add_subcommand("pipeline", "Run several stages in order");
    add_common(pipeline, o);
    pipeline->add_option("-s,--seed", o.seed, "Random seed (else the scenario seed)");
    pipeline->add_option("--stages", stage_list, "Comma separated stages")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try
    {
        auto cfg = resolve(o);
        std::vector<pla::Stage> stages;
        for (const auto &[cmd, s] : single)
            if (cmd->parsed())
                stages = {s};
        if (pipeline->parsed())
            stages = parse_stages(stage_list);

        pla::PipelineOptions opts;
        opts.out_dir = o.out_dir;
        opts.jobs = o.jobs;
        opts.log = o.quiet ? nullptr : &std::cerr;
        pla::run_pipeline(cfg, stages, opts);
        return 0;
    }
    catch (const pla::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    catch (const pla::InvariantError &e)
    {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    }
    catch (const pla::DependencyError &e)
    {
        std::cerr << "dependency error: " << e.what() << '\n';
        return 4;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
