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

#include "pla/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pla/errors.hpp"
#include "pla/parallel.hpp"

namespace pla
{

namespace
{

// Newell's method; length equals twice the polygon area
Vec3 newell_normal(const std::vector<Vec3> &v)
{
    Vec3 n;
    const std::size_t count = v.size();
    for (std::size_t i = 0; i < count; ++i)
    {
        const Vec3 &a = v[i];
        const Vec3 &b = v[(i + 1) % count];
        n.x += (a.y - b.y) * (a.z + b.z);
        n.y += (a.z - b.z) * (a.x + b.x);
        n.z += (a.x - b.x) * (a.y + b.y);
    }
    return n;
}

int dominant_axis(const Vec3 &n)
{
    const double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
    if (ax >= ay && ax >= az)
        return 0;
    return ay >= az ? 1 : 2;
}

void project(const Vec3 &p, int drop_axis, double &u, double &v)
{
    switch (drop_axis)
    {
    case 0:
        u = p.y, v = p.z;
        break;
    case 1:
        u = p.z, v = p.x;
        break;
    default:
        u = p.x, v = p.y;
        break;
    }
}

double orient2d(double ax, double ay, double bx, double by, double cx, double cy)
{
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

bool on_segment_2d(double ax, double ay, double bx, double by, double px, double py)
{
    return std::min(ax, bx) <= px && px <= std::max(ax, bx) && std::min(ay, by) <= py && py <= std::max(ay, by);
}

// Closed-segment intersection test in 2-D
bool segments_intersect_2d(double ax, double ay, double bx, double by,
                           double cx, double cy, double dx, double dy)
{
    const double d1 = orient2d(cx, cy, dx, dy, ax, ay);
    const double d2 = orient2d(cx, cy, dx, dy, bx, by);
    const double d3 = orient2d(ax, ay, bx, by, cx, cy);
    const double d4 = orient2d(ax, ay, bx, by, dx, dy);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    if (d1 == 0 && on_segment_2d(cx, cy, dx, dy, ax, ay))
        return true;
    if (d2 == 0 && on_segment_2d(cx, cy, dx, dy, bx, by))
        return true;
    if (d3 == 0 && on_segment_2d(ax, ay, bx, by, cx, cy))
        return true;
    if (d4 == 0 && on_segment_2d(ax, ay, bx, by, dx, dy))
        return true;
    return false;
}

double point_segment_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b)
{
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return distance(p, a + ab * t);
}

std::string facet_tag(const Facet &f)
{
    return "facet '" + f.id + "'";
}

} // namespace

void validate(const Facet &facet)
{
    const auto &v = facet.vertices;
    if (v.size() < 3)
        throw GeometryError(facet_tag(facet) + ": needs at least 3 vertices, has " + std::to_string(v.size()));

    for (const auto &p : v)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw GeometryError(facet_tag(facet) + ": non-finite vertex");

    if (std::abs(facet.reflection_coeff) > 1.0 + 1e-12)
        throw GeometryError(facet_tag(facet) + ": |reflection_coeff| exceeds 1");

    const Vec3 n = newell_normal(v);
    const double area2 = norm(n);
    if (!(area2 > 1e-12))
        throw GeometryError(facet_tag(facet) + ": zero-area polygon");
    const Vec3 unit = n / area2;

    Vec3 centroid;
    for (const auto &p : v)
        centroid += p;
    centroid = centroid / static_cast<double>(v.size());
    for (const auto &p : v)
        if (std::abs(dot(unit, p - centroid)) > plane_tolerance)
            throw GeometryError(facet_tag(facet) + ": vertices are not coplanar");

    const std::size_t count = v.size();
    for (std::size_t i = 0; i < count; ++i)
        if (distance(v[i], v[(i + 1) % count]) <= plane_tolerance)
            throw GeometryError(facet_tag(facet) + ": repeated vertex");

    // Non-adjacent edges must not touch
    const int axis = dominant_axis(unit);
    std::vector<double> pu(count), pv(count);
    for (std::size_t i = 0; i < count; ++i)
        project(v[i], axis, pu[i], pv[i]);
    for (std::size_t i = 0; i < count; ++i)
    {
        const std::size_t i2 = (i + 1) % count;
        for (std::size_t j = i + 1; j < count; ++j)
        {
            const std::size_t j2 = (j + 1) % count;
            if (j == i2 || j2 == i)
                continue;
            if (segments_intersect_2d(pu[i], pv[i], pu[i2], pv[i2], pu[j], pv[j], pu[j2], pv[j2]))
                throw GeometryError(facet_tag(facet) + ": polygon is self-intersecting");
        }
    }
}

void validate(const EnvironmentModel &env)
{
    std::set<std::string> ids;
    for (const auto &f : env.facets)
    {
        if (f.id.empty())
            throw GeometryError("facet with empty id in environment '" + env.name + "'");
        if (!ids.insert(f.id).second)
            throw GeometryError(facet_tag(f) + ": duplicate facet id");
        validate(f);
    }
}

PreparedFacet::PreparedFacet(const Facet &facet) : facet_(&facet)
{
    if (facet.vertices.size() < 3)
        throw GeometryError(facet_tag(facet) + ": needs at least 3 vertices");
    const Vec3 n = newell_normal(facet.vertices);
    const double len = norm(n);
    if (!(len > 1e-12))
        throw GeometryError(facet_tag(facet) + ": zero-area polygon");
    normal_ = n / len;

    Vec3 centroid;
    for (const auto &p : facet.vertices)
        centroid += p;
    centroid = centroid / static_cast<double>(facet.vertices.size());
    offset_ = dot(normal_, centroid);

    drop_axis_ = dominant_axis(normal_);
    u_.resize(facet.vertices.size());
    v_.resize(facet.vertices.size());
    for (std::size_t i = 0; i < facet.vertices.size(); ++i)
        project(facet.vertices[i], drop_axis_, u_[i], v_[i]);
}

bool PreparedFacet::contains(const Vec3 &p) const
{
    double pu, pv;
    project(p, drop_axis_, pu, pv);

    // Crossing-number test
    bool inside = false;
    const std::size_t count = u_.size();
    for (std::size_t i = 0, j = count - 1; i < count; j = i++)
    {
        if ((v_[i] > pv) != (v_[j] > pv))
        {
            const double x = (u_[j] - u_[i]) * (pv - v_[i]) / (v_[j] - v_[i]) + u_[i];
            if (pu < x)
                inside = !inside;
        }
    }
    if (inside)
        return true;

    const auto &vert = facet_->vertices;
    for (std::size_t i = 0; i < count; ++i)
        if (point_segment_distance(p, vert[i], vert[(i + 1) % count]) <= plane_tolerance)
            return true;
    return false;
}

Scene::Scene(const EnvironmentModel &env) : env_(&env)
{
    validate(env);
    facets_.reserve(env.facets.size());
    std::map<std::string, int> name_count;
    for (const auto &f : env.facets)
    {
        index_[f.id] = facets_.size();
        facets_.emplace_back(f);
        if (!f.name.empty())
            ++name_count[f.name];
    }
    for (const auto &f : env.facets)
        labels_[f.id] = (!f.name.empty() && name_count[f.name] == 1) ? f.name : f.id;
}

const PreparedFacet &Scene::facet(const std::string &id) const
{
    const auto it = index_.find(id);
    if (it == index_.end())
        throw GeometryError("unknown facet id '" + id + "'");
    return facets_[it->second];
}

const std::string &Scene::label(const std::string &facet_id) const
{
    const auto it = labels_.find(facet_id);
    if (it == labels_.end())
        throw GeometryError("unknown facet id '" + facet_id + "'");
    return it->second;
}

bool Scene::occluded(const Vec3 &a, const Vec3 &b) const
{
    const Vec3 ab = b - a;
    for (const auto &f : facets_)
    {
        const double s0 = f.signed_distance(a);
        const double s1 = f.signed_distance(b);
        if ((s0 > 0.0 && s1 > 0.0) || (s0 < 0.0 && s1 < 0.0) || s0 == s1)
            continue;
        const double t = s0 / (s0 - s1);
        const Vec3 hit = a + ab * t;
        if (distance(hit, a) <= occlusion_tolerance || distance(hit, b) <= occlusion_tolerance)
            continue;
        if (f.contains(hit))
            return true;
    }
    return false;
}

Vec3 mirror_point(const Vec3 &p, const Facet &facet)
{
    return PreparedFacet(facet).mirror(p);
}

std::vector<ImageSource> compute_image_sources(const Scene &scene, const Vec3 &ue, int max_order)
{
    if (max_order < 0 || max_order > 2)
        throw ConfigError("max_order must be 0, 1 or 2, got " + std::to_string(max_order));

    std::vector<ImageSource> sources;
    sources.push_back({"LOS", 0, {}, ue, {1.0, 0.0}});
    const auto &facets = scene.facets();

    if (max_order >= 1)
    {
        for (const auto &f : facets)
        {
            const Facet &raw = f.facet();
            sources.push_back({scene.label(raw.id), 1, {raw.id}, f.mirror(ue), raw.reflection_coeff});
        }
    }
    if (max_order >= 2)
    {
        for (const auto &first : facets)
        {
            const Vec3 image1 = first.mirror(ue);
            for (const auto &second : facets)
            {
                if (&first == &second)
                    continue;
                const Facet &a = first.facet();
                const Facet &b = second.facet();
                sources.push_back({scene.label(a.id) + "+" + scene.label(b.id), 2, {a.id, b.id},
                                   second.mirror(image1), a.reflection_coeff * b.reflection_coeff});
            }
        }
    }
    return sources;
}

std::vector<ImageSource> compute_image_sources(const EnvironmentModel &env, const Vec3 &ue, int max_order)
{
    return compute_image_sources(Scene(env), ue, max_order);
}

std::optional<SpecularPath> trace_specular_path(const Scene &scene, const ImageSource &src, const Vec3 &rx)
{
    const std::size_t order = src.facet_chain.size();

    // Intermediate images, images[i] is the source after i reflections
    std::vector<Vec3> images(order + 1);
    images[order] = src.position;
    for (std::size_t i = order; i > 0; --i)
        images[i - 1] = scene.facet(src.facet_chain[i - 1]).mirror(images[i]);

    SpecularPath path;
    path.points.reserve(order + 2);
    path.points.push_back(rx);
    Vec3 current = rx;
    for (std::size_t i = order; i > 0; --i)
    {
        const PreparedFacet &f = scene.facet(src.facet_chain[i - 1]);
        const Vec3 &target = images[i];
        const double s0 = f.signed_distance(current);
        const double s1 = f.signed_distance(target);
        if (std::abs(s0) <= plane_tolerance || !((s0 > 0.0 && s1 < 0.0) || (s0 < 0.0 && s1 > 0.0)))
            return std::nullopt;
        const double t = s0 / (s0 - s1);
        const Vec3 hit = current + (target - current) * t;
        if (!f.contains(hit))
            return std::nullopt;
        path.points.push_back(hit);
        current = hit;
    }
    path.points.push_back(images[0]);

    for (std::size_t i = 0; i + 1 < path.points.size(); ++i)
    {
        const double seg = distance(path.points[i], path.points[i + 1]);
        if (!(seg > 0.0))
            return std::nullopt;
        if (scene.occluded(path.points[i], path.points[i + 1]))
            return std::nullopt;
        path.length += seg;
    }
    path.delay = path.length / speed_of_light;
    return path;
}

std::optional<SpecularPath> trace_specular_path(const EnvironmentModel &env, const ImageSource &src, const Vec3 &rx)
{
    return trace_specular_path(Scene(env), src, rx);
}

VisibilityMask visibility_mask(const Scene &scene, std::span<const Vec3> element_positions,
                               std::span<const ImageSource> sources, int jobs)
{
    VisibilityMask mask;
    const auto count = static_cast<std::ptrdiff_t>(element_positions.size());
    for (const auto &src : sources)
    {
        auto &flags = mask[src.component_id];
        flags.assign(element_positions.size(), 0);
#pragma omp parallel for schedule(static) num_threads(resolve_jobs(jobs))
        for (std::ptrdiff_t m = 0; m < count; ++m)
            flags[m] = trace_specular_path(scene, src, element_positions[m]).has_value() ? 1 : 0;
    }
    return mask;
}

VisibilityMask visibility_mask(const EnvironmentModel &env, const Vec3 &ue, std::span<const Vec3> element_positions,
                               std::span<const ImageSource> sources, int jobs)
{
    for (const auto &src : sources)
        if (src.order == 0 && distance(src.position, ue) > plane_tolerance)
            throw GeometryError("direct-path source '" + src.component_id + "' does not sit at the UE position");
    return visibility_mask(Scene(env), element_positions, sources, jobs);
}

} // namespace pla
