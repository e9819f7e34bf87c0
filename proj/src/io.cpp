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

#include "pla/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pla/errors.hpp"

namespace pla::io
{

namespace
{

std::uint64_t to_little_endian(std::uint64_t v)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        std::uint64_t r = 0;
        for (int i = 0; i < 8; ++i)
            r |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
        return r;
    }
    return v;
}

std::size_t line_of(const std::string &text, std::size_t byte)
{
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

std::string read_all(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

template <typename T>
T get_or(const json &j, const char *key, T fallback)
{
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

json estimate_to_json(const MPCEstimate &e)
{
    return {{"delay_s", e.delay},
            {"azimuth_deg", rad2deg(e.azimuth)},
            {"elevation_deg", rad2deg(e.elevation)},
            {"amplitude", {{"re", e.amplitude.real()}, {"im", e.amplitude.imag()}}},
            {"gamma", e.gamma},
            {"component_snr_db", e.component_snr_db}};
}

MPCEstimate estimate_from_json(const json &j)
{
    MPCEstimate e;
    e.delay = j.at("delay_s").get<double>();
    e.azimuth = deg2rad(j.at("azimuth_deg").get<double>());
    e.elevation = deg2rad(j.at("elevation_deg").get<double>());
    e.amplitude = {j.at("amplitude").at("re").get<double>(), j.at("amplitude").at("im").get<double>()};
    e.gamma = j.at("gamma").get<double>();
    e.component_snr_db = j.at("component_snr_db").get<double>();
    return e;
}

json prediction_to_json(const Prediction &p)
{
    return {{"component_id", p.component_id},
            {"delay_s", p.delay},
            {"azimuth_deg", rad2deg(p.azimuth)},
            {"elevation_deg", rad2deg(p.elevation)},
            {"distance_m", p.distance}};
}

Prediction prediction_from_json(const json &j)
{
    return {j.at("component_id").get<std::string>(), j.at("delay_s").get<double>(),
            deg2rad(j.at("azimuth_deg").get<double>()), deg2rad(j.at("elevation_deg").get<double>()),
            j.at("distance_m").get<double>()};
}

// Wraps json type errors into configuration errors naming the file
template <typename F>
auto with_context(const fs::path &path, F &&f)
{
    try
    {
        return f();
    }
    catch (const json::exception &e)
    {
        throw ConfigError("'" + path.string() + "': " + e.what());
    }
}

} // namespace

json read_json_file(const fs::path &path)
{
    const std::string text = read_all(path);
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError("'" + path.string() + "' line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
    }
}

void write_text_file(const fs::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

Vec3 vec3_from_json(const json &j)
{
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("expected a 3-D point [x, y, z], got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const Vec3 &v)
{
    return json::array({v.x, v.y, v.z});
}

EnvironmentModel environment_from_json(const json &j)
{
    EnvironmentModel env;
    env.name = get_or<std::string>(j, "name", "");
    for (const auto &jf : j.at("facets"))
    {
        Facet f;
        f.id = jf.at("id").get<std::string>();
        f.name = get_or<std::string>(jf, "name", "");
        for (const auto &v : jf.at("vertices"))
            f.vertices.push_back(vec3_from_json(v));
        if (const auto it = jf.find("reflection_coeff"); it != jf.end())
            f.reflection_coeff = {get_or<double>(*it, "re", 0.0), get_or<double>(*it, "im", 0.0)};
        env.facets.push_back(std::move(f));
    }
    return env;
}

json to_json(const EnvironmentModel &env)
{
    json facets = json::array();
    for (const auto &f : env.facets)
    {
        json verts = json::array();
        for (const auto &v : f.vertices)
            verts.push_back(to_json(v));
        facets.push_back({{"id", f.id},
                          {"name", f.name},
                          {"vertices", verts},
                          {"reflection_coeff", {{"re", f.reflection_coeff.real()}, {"im", f.reflection_coeff.imag()}}}});
    }
    return {{"name", env.name}, {"facets", facets}};
}

EnvironmentModel load_environment(const fs::path &path)
{
    const json j = read_json_file(path);
    EnvironmentModel env = with_context(path, [&] { return environment_from_json(j); });
    validate(env);
    return env;
}

void save_environment(const fs::path &path, const EnvironmentModel &env)
{
    write_text_file(path, to_json(env).dump(2) + "\n");
}

AntennaPattern pattern_from_json(const json &j)
{
    AntennaPattern p;
    p.kind = pattern_kind_from_string(get_or<std::string>(j, "kind", "isotropic"));
    p.exponent = get_or<double>(j, "q", 2.0);
    p.back_floor = get_or<double>(j, "back_floor", 0.0);
    if (p.exponent < 0.0 || p.back_floor < 0.0 || p.back_floor >= 1.0)
        throw ConfigError("antenna pattern needs q >= 0 and back_floor in [0, 1)");
    return p;
}

json to_json(const AntennaPattern &p)
{
    return {{"kind", to_string(p.kind)}, {"q", p.exponent}, {"back_floor", p.back_floor}};
}

ArrayGeometry ArrayConfig::build() const
{
    return make_ura(rows, cols, f_c_hz, origin, frame_from_boresight(boresight));
}

ArrayConfig array_config_from_json(const json &j)
{
    ArrayConfig cfg;
    cfg.rows = j.at("rows").get<int>();
    cfg.cols = j.at("cols").get<int>();
    cfg.f_c_hz = j.at("f_c_hz").get<double>();
    if (const auto it = j.find("origin"); it != j.end())
        cfg.origin = vec3_from_json(*it);
    if (const auto it = j.find("boresight"); it != j.end())
        cfg.boresight = vec3_from_json(*it);
    if (const auto it = j.find("pattern"); it != j.end())
        cfg.pattern = pattern_from_json(*it);
    return cfg;
}

json to_json(const ArrayConfig &cfg)
{
    return {{"rows", cfg.rows},
            {"cols", cfg.cols},
            {"f_c_hz", cfg.f_c_hz},
            {"origin", to_json(cfg.origin)},
            {"boresight", to_json(cfg.boresight)},
            {"pattern", to_json(cfg.pattern)}};
}

void write_tensor(std::ostream &os, const ChannelTensor &tensor)
{
    validate(tensor);
    json positions = json::array();
    for (const auto &p : tensor.element_positions)
        positions.push_back(to_json(p));
    const json header = {
        {"format", "plasim-channel-tensor"},
        {"version", 1},
        {"elements", tensor.element_positions.size()},
        {"freqs", {{"start_hz", tensor.freqs.start}, {"step_hz", tensor.freqs.step}, {"count", tensor.freqs.count}}},
        {"metadata",
         {{"f_c_hz", tensor.metadata.f_c},
          {"bandwidth_hz", tensor.metadata.bandwidth},
          {"scenario", tensor.metadata.scenario},
          {"seed", tensor.metadata.seed}}},
        {"encoding", "float64-le re/im interleaved, element-major"},
        {"element_positions", positions}};
    os << header.dump() << '\n';

    const auto M = tensor.H.rows(), N = tensor.H.cols();
    std::vector<std::uint64_t> buffer(static_cast<std::size_t>(2 * N));
    for (Eigen::Index m = 0; m < M; ++m)
    {
        for (Eigen::Index n = 0; n < N; ++n)
        {
            buffer[static_cast<std::size_t>(2 * n)] = to_little_endian(std::bit_cast<std::uint64_t>(tensor.H(m, n).real()));
            buffer[static_cast<std::size_t>(2 * n + 1)] = to_little_endian(std::bit_cast<std::uint64_t>(tensor.H(m, n).imag()));
        }
        os.write(reinterpret_cast<const char *>(buffer.data()), static_cast<std::streamsize>(buffer.size() * 8));
    }
    if (!os)
        throw ConfigError("failed writing channel tensor");
}

ChannelTensor read_tensor(std::istream &is)
{
    std::string line;
    if (!std::getline(is, line))
        throw ConfigError("channel tensor file is empty");
    json header;
    try
    {
        header = json::parse(line);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError(std::string("channel tensor header line 1: ") + e.what());
    }
    if (header.value("format", "") != "plasim-channel-tensor")
        throw ConfigError("not a channel tensor file");

    ChannelTensor t;
    try
    {
        const auto &f = header.at("freqs");
        t.freqs = {f.at("start_hz").get<double>(), f.at("step_hz").get<double>(), f.at("count").get<std::size_t>()};
        const auto &md = header.at("metadata");
        t.metadata = {md.at("f_c_hz").get<double>(), md.at("bandwidth_hz").get<double>(),
                      md.at("scenario").get<std::string>(), md.at("seed").get<std::uint64_t>()};
        for (const auto &p : header.at("element_positions"))
            t.element_positions.push_back(vec3_from_json(p));
        if (header.at("elements").get<std::size_t>() != t.element_positions.size())
            throw ConfigError("channel tensor element count does not match the position list");
    }
    catch (const json::exception &e)
    {
        throw ConfigError(std::string("channel tensor header: ") + e.what());
    }

    const auto M = static_cast<Eigen::Index>(t.element_positions.size());
    const auto N = static_cast<Eigen::Index>(t.freqs.count);
    t.H.resize(M, N);
    std::vector<std::uint64_t> buffer(static_cast<std::size_t>(2 * N));
    for (Eigen::Index m = 0; m < M; ++m)
    {
        is.read(reinterpret_cast<char *>(buffer.data()), static_cast<std::streamsize>(buffer.size() * 8));
        if (is.gcount() != static_cast<std::streamsize>(buffer.size() * 8))
            throw ConfigError("channel tensor payload is truncated");
        for (Eigen::Index n = 0; n < N; ++n)
            t.H(m, n) = {std::bit_cast<double>(to_little_endian(buffer[static_cast<std::size_t>(2 * n)])),
                         std::bit_cast<double>(to_little_endian(buffer[static_cast<std::size_t>(2 * n + 1)]))};
    }
    validate(t);
    return t;
}

void save_tensor(const fs::path &path, const ChannelTensor &tensor)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot write '" + path.string() + "'");
    write_tensor(out, tensor);
}

ChannelTensor load_tensor(const fs::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open '" + path.string() + "'");
    return read_tensor(in);
}

json to_json(const SubarrayResult &r)
{
    json est = json::array();
    for (const auto &e : r.estimates)
        est.push_back(estimate_to_json(e));
    return {{"index", r.subarray_index},
            {"noise_var", r.noise_var},
            {"residual_energy_frac", r.residual_energy_frac},
            {"total_energy", r.total_energy},
            {"estimates", est}};
}

SubarrayResult subarray_result_from_json(const json &j)
{
    SubarrayResult r;
    r.subarray_index = j.at("index").get<int>();
    r.noise_var = j.at("noise_var").get<double>();
    r.residual_energy_frac = j.at("residual_energy_frac").get<double>();
    r.total_energy = j.at("total_energy").get<double>();
    for (const auto &e : j.at("estimates"))
        r.estimates.push_back(estimate_from_json(e));
    return r;
}

void save_results(const fs::path &path, const std::vector<SubarrayResult> &results)
{
    std::ostringstream ss;
    for (const auto &r : results)
        ss << to_json(r).dump() << '\n';
    write_text_file(path, ss.str());
}

std::vector<SubarrayResult> load_results(const fs::path &path)
{
    const std::string text = read_all(path);
    std::istringstream in(text);
    std::vector<SubarrayResult> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        if (line.empty())
            continue;
        try
        {
            out.push_back(subarray_result_from_json(json::parse(line)));
        }
        catch (const json::exception &e)
        {
            throw ConfigError("'" + path.string() + "' line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

json to_json(const Association &a)
{
    json matches = json::object();
    for (const auto &[id, m] : a.by_component)
    {
        if (!m)
        {
            matches[id] = nullptr;
            continue;
        }
        matches[id] = {{"estimate_index", m->estimate_index},
                       {"distance", m->distance},
                       {"estimate", estimate_to_json(m->estimate)},
                       {"prediction", prediction_to_json(m->prediction)}};
    }
    return {{"subarray_index", a.subarray_index}, {"components", matches}, {"unassociated", a.unassociated}};
}

Association association_from_json(const json &j)
{
    Association a;
    a.subarray_index = j.at("subarray_index").get<int>();
    for (const auto &[id, m] : j.at("components").items())
    {
        if (m.is_null())
        {
            a.by_component[id] = std::nullopt;
            continue;
        }
        a.by_component[id] = Match{m.at("estimate_index").get<std::size_t>(), estimate_from_json(m.at("estimate")),
                                   prediction_from_json(m.at("prediction")), m.at("distance").get<double>()};
    }
    a.unassociated = j.at("unassociated").get<std::vector<std::size_t>>();
    return a;
}

void save_associations(const fs::path &path, const std::vector<Association> &assoc)
{
    json arr = json::array();
    for (const auto &a : assoc)
        arr.push_back(to_json(a));
    write_text_file(path, json{{"associations", arr}}.dump(1) + "\n");
}

std::vector<Association> load_associations(const fs::path &path)
{
    const json j = read_json_file(path);
    return with_context(path, [&] {
        std::vector<Association> out;
        for (const auto &a : j.at("associations"))
            out.push_back(association_from_json(a));
        return out;
    });
}

json to_json(const VisibilityMask &mask)
{
    json comps = json::object();
    std::size_t elements = 0;
    for (const auto &[id, flags] : mask)
    {
        std::string bits(flags.size(), '0');
        for (std::size_t i = 0; i < flags.size(); ++i)
            bits[i] = flags[i] ? '1' : '0';
        comps[id] = bits;
        elements = flags.size();
    }
    return {{"elements", elements}, {"components", comps}};
}

VisibilityMask visibility_from_json(const json &j)
{
    VisibilityMask mask;
    for (const auto &[id, bits] : j.at("components").items())
    {
        const auto s = bits.get<std::string>();
        auto &flags = mask[id];
        flags.resize(s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            flags[i] = s[i] == '1' ? 1 : 0;
    }
    return mask;
}

void write_marginal_csv(std::ostream &os, const Marginal &m, const std::string &row_name, bool row_is_angle,
                        const std::string &col_name, bool col_is_angle, bool in_db)
{
    const double peak = m.values.empty() ? 0.0 : *std::max_element(m.values.begin(), m.values.end());
    os << std::setprecision(10);
    os << row_name << '\\' << col_name;
    for (double c : m.col_axis)
        os << ',' << (col_is_angle ? rad2deg(c) : c);
    os << '\n';
    for (std::size_t r = 0; r < m.row_axis.size(); ++r)
    {
        os << (row_is_angle ? rad2deg(m.row_axis[r]) : m.row_axis[r]);
        for (std::size_t c = 0; c < m.col_axis.size(); ++c)
        {
            const double p = m.at(r, c);
            if (in_db)
                os << ',' << (p > 0.0 && peak > 0.0 ? std::max(-300.0, 10.0 * std::log10(p / peak)) : -300.0);
            else
                os << ',' << p;
        }
        os << '\n';
    }
}

void write_amplitude_map_csv(std::ostream &os, const AmplitudeMap &map)
{
    os << std::setprecision(10);
    for (int r = 0; r < map.grid.rows; ++r)
    {
        for (int c = 0; c < map.grid.cols; ++c)
        {
            if (c > 0)
                os << ',';
            if (const auto &v = map.at(r, c))
                os << *v;
        }
        os << '\n';
    }
}

void write_energy_report_csv(std::ostream &os, const EnergyReport &report)
{
    os << std::setprecision(6) << std::fixed;
    os << "component,mean_pct,std_pct\n";
    for (const auto &row : report.components)
        os << row.label << ',' << row.mean_pct << ',' << row.std_pct << '\n';
    os << report.captured.label << ',' << report.captured.mean_pct << ',' << report.captured.std_pct << '\n';
    os << report.residual.label << ',' << report.residual.mean_pct << ',' << report.residual.std_pct << '\n';
    os << "N_s," << report.n_subarrays << ",\n";
}

std::string format_energy_table(const EnergyReport &report)
{
    std::ostringstream os;
    std::size_t width = 16;
    for (const auto &row : report.components)
        width = std::max(width, row.label.size() + 2);
    auto line = [&](const EnergyRow &row) {
        os << std::left << std::setw(static_cast<int>(width)) << row.label << std::right << std::fixed
           << std::setprecision(1) << std::setw(8) << row.mean_pct << " % +/- " << std::setw(5) << row.std_pct << " %\n";
    };
    os << "component energy over N_s = " << report.n_subarrays << " subarrays\n";
    for (const auto &row : report.components)
        line(row);
    line(report.captured);
    line(report.residual);
    if (report.overflow_subarrays > 0)
        os << "note: " << report.overflow_subarrays
           << " subarrays had correlated estimates summing above 100 % (clipped)\n";
    return os.str();
}

} // namespace pla::io
