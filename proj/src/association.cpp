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

#include "pla/association.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "pla/channel.hpp"
#include "pla/errors.hpp"

namespace pla
{

Gates default_gates(double band_hz)
{
    if (!(band_hz > 0.0))
        throw ConfigError("band must be positive");
    return {2.0 / band_hz, deg2rad(5.0), deg2rad(5.0)};
}

void validate(const Gates &gates)
{
    if (!(gates.delay > 0.0) || !(gates.azimuth > 0.0) || !(gates.elevation > 0.0))
        throw ConfigError("association gates must be positive");
}

std::vector<Prediction> predict(const Scene &scene, const Subarray &sub, const ArrayGeometry &arr,
                                std::span<const ImageSource> sources)
{
    std::vector<Prediction> out;
    for (const auto &src : sources)
    {
        const auto path = trace_specular_path(scene, src, sub.centroid);
        if (!path)
            continue;
        const PathParams pp = path_params(*path, arr.frame);
        out.push_back({src.component_id, pp.delay, pp.azimuth, pp.elevation, pp.distance});
    }
    return out;
}

double gate_distance(const MPCEstimate &e, const Prediction &p, const Gates &gates)
{
    const double d_az = std::remainder(e.azimuth - p.azimuth, two_pi);
    return std::max({std::abs(e.delay - p.delay) / gates.delay, std::abs(d_az) / gates.azimuth,
                     std::abs(e.elevation - p.elevation) / gates.elevation});
}

Association associate(std::span<const MPCEstimate> estimates, std::span<const Prediction> predictions,
                      const Gates &gates)
{
    validate(gates);

    struct Candidate
    {
        double d;
        std::size_t est;
        std::size_t pred;
    };
    std::vector<Candidate> pairs;
    for (std::size_t i = 0; i < estimates.size(); ++i)
        for (std::size_t j = 0; j < predictions.size(); ++j)
        {
            const double d = gate_distance(estimates[i], predictions[j], gates);
            if (d <= 1.0)
                pairs.push_back({d, i, j});
        }

    std::sort(pairs.begin(), pairs.end(), [&](const Candidate &a, const Candidate &b) {
        const auto &pa = predictions[a.pred];
        const auto &pb = predictions[b.pred];
        return std::tie(a.d, pa.delay, pa.azimuth, pa.elevation, a.pred, a.est) <
               std::tie(b.d, pb.delay, pb.azimuth, pb.elevation, b.pred, b.est);
    });

    Association out;
    for (const auto &p : predictions)
        out.by_component.emplace(p.component_id, std::nullopt);

    std::vector<bool> est_used(estimates.size(), false), pred_used(predictions.size(), false);
    for (const auto &c : pairs)
    {
        if (est_used[c.est] || pred_used[c.pred])
            continue;
        est_used[c.est] = pred_used[c.pred] = true;
        out.by_component[predictions[c.pred].component_id] = Match{c.est, estimates[c.est], predictions[c.pred], c.d};
    }
    for (std::size_t i = 0; i < estimates.size(); ++i)
        if (!est_used[i])
            out.unassociated.push_back(i);
    return out;
}

std::map<std::string, AmplitudeMap> visibility_and_amplitude_maps(std::span<const SubarrayResult> results,
                                                                  std::span<const Association> associations,
                                                                  const ArrayGeometry &arr,
                                                                  std::span<const Subarray> subarrays,
                                                                  bool compensate_pathloss)
{
    (void)results;
    const TileGrid grid = tile_grid(subarrays);
    std::map<int, const Subarray *> by_index;
    for (const auto &s : subarrays)
        by_index[s.index] = &s;

    std::map<std::string, AmplitudeMap> maps;
    auto map_for = [&](const std::string &id) -> AmplitudeMap & {
        auto it = maps.find(id);
        if (it == maps.end())
        {
            AmplitudeMap m{id, grid, std::vector<std::optional<double>>(static_cast<std::size_t>(grid.rows * grid.cols))};
            it = maps.emplace(id, std::move(m)).first;
        }
        return it->second;
    };

    for (const auto &assoc : associations)
    {
        const auto sit = by_index.find(assoc.subarray_index);
        if (sit == by_index.end())
            throw InvariantError("association refers to unknown subarray " + std::to_string(assoc.subarray_index));
        const Subarray &sub = *sit->second;
        for (const auto &[id, match] : assoc.by_component)
        {
            AmplitudeMap &m = map_for(id);
            if (!match)
                continue;
            double value = std::abs(match->estimate.amplitude);
            if (compensate_pathloss)
                value *= 4.0 * std::numbers::pi * arr.f_c * match->prediction.distance / speed_of_light;
            m.cells[static_cast<std::size_t>(sub.tile_row * grid.cols + sub.tile_col)] = value;
        }
    }
    return maps;
}

SubarrayVisibility subarray_visibility(const std::string &component_id, std::span<const std::uint8_t> element_mask,
                                       std::span<const Subarray> subarrays)
{
    SubarrayVisibility out{component_id, tile_grid(subarrays), {}};
    out.cells.assign(static_cast<std::size_t>(out.grid.rows * out.grid.cols), 0);
    for (const auto &s : subarrays)
    {
        std::size_t visible = 0;
        for (auto idx : s.element_indices)
        {
            if (idx >= element_mask.size())
                throw InvariantError("visibility mask is shorter than the array");
            visible += element_mask[idx] ? 1 : 0;
        }
        out.cells[static_cast<std::size_t>(s.tile_row * out.grid.cols + s.tile_col)] =
            2 * visible > s.element_indices.size() ? 1 : 0;
    }
    return out;
}

double mismatch_score(const SubarrayVisibility &geometric, const AmplitudeMap &estimated)
{
    if (!(geometric.grid == estimated.grid) || geometric.cells.size() != estimated.cells.size())
        throw InvariantError("visibility and amplitude maps use different subarray grids");
    if (geometric.cells.empty())
        throw InvariantError("cannot compare empty maps");
    std::size_t disagree = 0;
    for (std::size_t i = 0; i < geometric.cells.size(); ++i)
        if ((geometric.cells[i] != 0) != estimated.cells[i].has_value())
            ++disagree;
    return static_cast<double>(disagree) / static_cast<double>(geometric.cells.size());
}

namespace
{

EnergyRow summarize(const std::string &label, const std::vector<double> &pct)
{
    EnergyRow row{label};
    if (pct.empty())
        return row;
    const double n = static_cast<double>(pct.size());
    for (double v : pct)
        row.mean_pct += v;
    row.mean_pct /= n;
    double var = 0.0;
    for (double v : pct)
        var += (v - row.mean_pct) * (v - row.mean_pct);
    row.std_pct = std::sqrt(var / n);
    return row;
}

} // namespace

EnergyReport energy_report(std::span<const SubarrayResult> results, std::span<const Association> associations,
                           std::size_t top_k)
{
    if (results.empty())
        throw InvariantError("energy report needs at least one subarray result");
    if (top_k < 1)
        throw ConfigError("energy report needs top_k >= 1");

    std::map<int, const Association *> assoc_by_index;
    std::set<std::string> ids;
    for (const auto &a : associations)
    {
        assoc_by_index[a.subarray_index] = &a;
        for (const auto &[id, m] : a.by_component)
            ids.insert(id);
    }

    EnergyReport report;
    report.n_subarrays = static_cast<int>(results.size());
    std::map<std::string, std::vector<double>> per_component;
    std::vector<double> residual, captured;
    for (const auto &r : results)
    {
        const bool has_energy = r.total_energy > 0.0;
        residual.push_back(100.0 * r.residual_energy_frac);
        double total = 0.0;
        for (std::size_t k = 0; k < r.estimates.size() && has_energy; ++k)
            total += component_energy_frac(r, k);
        if (total > 1.0)
        {
            ++report.overflow_subarrays;
            total = 1.0;
        }
        captured.push_back(100.0 * total);

        const auto it = assoc_by_index.find(r.subarray_index);
        for (const auto &id : ids)
        {
            double frac = 0.0;
            if (it != assoc_by_index.end() && has_energy)
            {
                const auto mit = it->second->by_component.find(id);
                if (mit != it->second->by_component.end() && mit->second)
                    frac = std::norm(mit->second->estimate.amplitude) / r.total_energy;
            }
            per_component[id].push_back(100.0 * std::min(frac, 1.0));
        }
    }

    for (const auto &[id, values] : per_component)
        report.components.push_back(summarize(id, values));
    std::stable_sort(report.components.begin(), report.components.end(),
                     [](const EnergyRow &a, const EnergyRow &b) { return a.mean_pct > b.mean_pct; });
    if (report.components.size() > top_k)
        report.components.resize(top_k);
    report.residual = summarize("residual", residual);
    report.captured = summarize("total estimated", captured);
    return report;
}

} // namespace pla
