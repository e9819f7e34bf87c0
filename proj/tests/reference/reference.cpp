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

#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace pla::reference
{

namespace
{

Vec3 newell_normal(const Facet &facet)
{
    Vec3 n;
    const auto &v = facet.vertices;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const Vec3 &a = v[i];
        const Vec3 &b = v[(i + 1) % v.size()];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n / norm(n);
}

double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b)
{
    const Vec3 ab = b - a;
    const double t = std::clamp(dot(p - a, ab) / dot(ab, ab), 0.0, 1.0);
    return norm(p - (a + ab * t));
}

double golden_min(const std::function<double(double)> &f, double lo, double hi, int iters)
{
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < iters; ++i)
    {
        if (f1 < f2)
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        else
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    return 0.5 * (lo + hi);
}

double wrap_pi(double a)
{
    return std::remainder(a, 2.0 * std::numbers::pi);
}

} // namespace

BeamSpectrum naive_spectrum(const ChannelTensor &tensor, const ArrayGeometry &arr, const SpectrumGrid &grid)
{
    BeamSpectrum spec;
    spec.grid = grid;
    spec.power.assign(grid.size(), 0.0);

    Vec3 centroid;
    for (const auto &p : arr.element_positions)
        centroid = centroid + p;
    centroid = centroid / static_cast<double>(arr.size());

    const auto M = static_cast<std::size_t>(tensor.H.rows());
    const auto N = static_cast<std::size_t>(tensor.H.cols());
    const double norm2 = static_cast<double>(M * N) * static_cast<double>(M * N);
    std::size_t idx = 0;
    for (double az : grid.azimuths)
        for (double el : grid.elevations)
            for (double dist : grid.distances)
            {
                const Vec3 dir = arr.frame.boresight * (std::cos(el) * std::cos(az)) +
                                 arr.frame.horizontal * (std::cos(el) * std::sin(az)) + arr.frame.vertical * std::sin(el);
                const Vec3 point = centroid + dir * dist;
                cdouble acc = 0.0;
                for (std::size_t m = 0; m < M; ++m)
                {
                    const double d = norm(point - arr.element_positions[m]);
                    for (std::size_t n = 0; n < N; ++n)
                    {
                        const double f = tensor.freqs.start + static_cast<double>(n) * tensor.freqs.step;
                        // conj(exp(-j 2 pi f d / c))
                        acc += tensor.H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) *
                               std::polar(1.0, 2.0 * std::numbers::pi * f * d / speed_of_light);
                    }
                }
                spec.power[idx++] = std::norm(acc) / norm2;
            }
    return spec;
}

Marginals naive_marginals(const BeamSpectrum &spec)
{
    const auto &g = spec.grid;
    const std::size_t na = g.azimuths.size(), ne = g.elevations.size(), nd = g.distances.size();
    auto p = [&](std::size_t i, std::size_t j, std::size_t k) { return spec.power[(i * ne + j) * nd + k]; };

    Marginals out;
    out.az_el = {g.azimuths, g.elevations, std::vector<double>(na * ne, -1.0)};
    out.az_dist = {g.azimuths, g.distances, std::vector<double>(na * nd, -1.0)};
    out.el_dist = {g.elevations, g.distances, std::vector<double>(ne * nd, -1.0)};
    for (std::size_t i = 0; i < na; ++i)
        for (std::size_t j = 0; j < ne; ++j)
            for (std::size_t k = 0; k < nd; ++k)
            {
                double &a = out.az_el.values[i * ne + j];
                double &b = out.az_dist.values[i * nd + k];
                double &c = out.el_dist.values[j * nd + k];
                a = std::max(a, p(i, j, k));
                b = std::max(b, p(i, j, k));
                c = std::max(c, p(i, j, k));
            }
    return out;
}

CMatrix naive_specular_sum(std::span<const SyntheticComponent> components, const FrequencyGrid &freqs,
                           std::size_t elements)
{
    CMatrix H = CMatrix::Zero(static_cast<Eigen::Index>(elements), static_cast<Eigen::Index>(freqs.count));
    for (const auto &c : components)
        for (std::size_t m = 0; m < elements; ++m)
        {
            if (!c.visible[m])
                continue;
            for (std::size_t n = 0; n < freqs.count; ++n)
            {
                const double f = freqs.start + static_cast<double>(n) * freqs.step;
                H(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) +=
                    c.amplitude[m] * std::exp(cdouble(0.0, -2.0 * std::numbers::pi * f * c.delay[m]));
            }
        }
    return H;
}

CVector naive_atom(const std::vector<Vec3> &positions, const ArrayFrame &frame, std::span<const double> freqs,
                   double delay, double azimuth, double elevation)
{
    Vec3 centroid;
    for (const auto &p : positions)
        centroid = centroid + p;
    centroid = centroid / static_cast<double>(positions.size());
    const Vec3 u = frame.boresight * (std::cos(elevation) * std::cos(azimuth)) +
                   frame.horizontal * (std::cos(elevation) * std::sin(azimuth)) + frame.vertical * std::sin(elevation);
    const double scale = 1.0 / std::sqrt(static_cast<double>(positions.size() * freqs.size()));
    CVector a(static_cast<Eigen::Index>(positions.size() * freqs.size()));
    for (std::size_t m = 0; m < positions.size(); ++m)
        for (std::size_t n = 0; n < freqs.size(); ++n)
        {
            const double advance = dot(positions[m] - centroid, u) / speed_of_light;
            a(static_cast<Eigen::Index>(m * freqs.size() + n)) =
                scale * std::exp(cdouble(0.0, -2.0 * std::numbers::pi * freqs[n] * (delay - advance)));
        }
    return a;
}

Vec3 householder_mirror(const Vec3 &p, const Facet &facet)
{
    const Vec3 n = newell_normal(facet);
    // (I - 2 n n^T) (p - v0) + v0
    const Vec3 q = p - facet.vertices.front();
    return facet.vertices.front() + q - n * (2.0 * dot(n, q));
}

bool inside_polygon(const Vec3 &p, const Facet &facet, double tol)
{
    const Vec3 n = newell_normal(facet);
    const auto &v = facet.vertices;
    if (std::abs(dot(p - v.front(), n)) > tol)
        return false;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (point_segment_distance(p, v[i], v[(i + 1) % v.size()]) <= tol)
            return true;
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
        const Vec3 a = v[i] - p;
        const Vec3 b = v[(i + 1) % v.size()] - p;
        total += std::atan2(dot(cross(a, b), n), dot(a, b));
    }
    return std::abs(total) > std::numbers::pi;
}

std::vector<ChainImage> enumerate_chains(const EnvironmentModel &env, const Vec3 &ue, int max_order)
{
    std::vector<ChainImage> out{{{}, ue}};
    std::function<void(ChainImage)> grow = [&](ChainImage img) {
        if (static_cast<int>(img.chain.size()) == max_order)
            return;
        for (const auto &f : env.facets)
        {
            if (!img.chain.empty() && img.chain.back() == f.id)
                continue;
            ChainImage next = img;
            next.chain.push_back(f.id);
            next.position = householder_mirror(img.position, f);
            out.push_back(next);
            grow(next);
        }
    };
    grow(out.front());
    return out;
}

bool ray_sample_occluded(const EnvironmentModel &env, const Vec3 &a, const Vec3 &b, int samples, double end_margin)
{
    const double len = norm(b - a);
    for (const auto &f : env.facets)
    {
        const Vec3 n = newell_normal(f);
        const Vec3 &v0 = f.vertices.front();
        double prev = dot(a - v0, n);
        for (int i = 1; i <= samples; ++i)
        {
            const double t = static_cast<double>(i) / samples;
            const double cur = dot(a + (b - a) * t - v0, n);
            if ((prev <= 0.0 && cur > 0.0) || (prev >= 0.0 && cur < 0.0) || cur == 0.0)
            {
                const double t0 = static_cast<double>(i - 1) / samples;
                const double tc = cur == prev ? t : t0 + (t - t0) * prev / (prev - cur);
                if (tc * len > end_margin && (1.0 - tc) * len > end_margin && inside_polygon(a + (b - a) * tc, f))
                    return true;
            }
            prev = cur;
        }
    }
    return false;
}

std::optional<Vec3> fermat_reflection_point(const Facet &facet, const Vec3 &rx, const Vec3 &ue)
{
    const Vec3 n = newell_normal(facet);
    const Vec3 &v0 = facet.vertices.front();
    const Vec3 e1 = (facet.vertices[1] - v0) / norm(facet.vertices[1] - v0);
    const Vec3 e2 = cross(n, e1);
    auto point = [&](double s, double t) { return v0 + e1 * s + e2 * t; };
    auto length = [&](double s, double t) { return norm(rx - point(s, t)) + norm(point(s, t) - ue); };

    const double span = 4.0 * (norm(rx - v0) + norm(ue - v0));
    const double s = golden_min(
        [&](double s) {
            const double t = golden_min([&](double t) { return length(s, t); }, -span, span, 160);
            return length(s, t);
        },
        -span, span, 160);
    const double t = golden_min([&](double t) { return length(s, t); }, -span, span, 160);
    const Vec3 q = point(s, t);
    if (!inside_polygon(q, facet, 1e-7))
        return std::nullopt;
    return q;
}

std::vector<int> exhaustive_assignment(std::span<const MPCEstimate> estimates, std::span<const Prediction> predictions,
                                       const Gates &gates)
{
    const std::size_t P = predictions.size(), E = estimates.size();
    auto dist = [&](std::size_t e, std::size_t p) {
        const double dt = std::abs(estimates[e].delay - predictions[p].delay) / gates.delay;
        const double da = std::abs(wrap_pi(estimates[e].azimuth - predictions[p].azimuth)) / gates.azimuth;
        const double de = std::abs(estimates[e].elevation - predictions[p].elevation) / gates.elevation;
        return std::max({dt, da, de});
    };

    std::vector<int> current(P, -1), best;
    std::vector<double> best_key;
    std::vector<char> used(E, 0);
    bool have_best = false;

    std::function<void(std::size_t)> visit = [&](std::size_t p) {
        if (p == P)
        {
            for (std::size_t i = 0; i < P; ++i)
                if (current[i] < 0)
                    for (std::size_t e = 0; e < E; ++e)
                        if (!used[e] && dist(e, i) <= 1.0)
                            return; // not maximal
            std::vector<double> key;
            for (std::size_t i = 0; i < P; ++i)
                if (current[i] >= 0)
                    key.push_back(dist(static_cast<std::size_t>(current[i]), i));
            std::sort(key.begin(), key.end());
            if (!have_best || key < best_key)
            {
                have_best = true;
                best_key = key;
                best = current;
            }
            return;
        }
        visit(p + 1);
        for (std::size_t e = 0; e < E; ++e)
        {
            if (used[e] || dist(e, p) > 1.0)
                continue;
            used[e] = 1;
            current[p] = static_cast<int>(e);
            visit(p + 1);
            current[p] = -1;
            used[e] = 0;
        }
    };
    visit(0);
    return best;
}

} // namespace pla::reference
