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

#ifndef PLA_GEOMETRY_HPP
#define PLA_GEOMETRY_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pla/vec3.hpp"

namespace pla
{

// Tolerances of the geometric model (meters)
inline constexpr double plane_tolerance = 1e-9;     // coplanarity, polygon boundary
inline constexpr double occlusion_tolerance = 1e-6; // hits this close to a segment end are ignored

// Planar polygonal reflector. The vertex winding defines the normal (right-hand rule).
// Reflection is two-sided.
struct Facet
{
    std::string id;
    std::string name;
    std::vector<Vec3> vertices;
    cdouble reflection_coeff{1.0, 0.0};
};

struct EnvironmentModel
{
    std::string name;
    std::vector<Facet> facets;
};

// Virtual transmitter for one specular component. The chain lists the facets in
// propagation order, starting at the UE.
struct ImageSource
{
    std::string component_id;
    int order = 0;
    std::vector<std::string> facet_chain;
    Vec3 position;
    cdouble gain_factor{1.0, 0.0};
};

// Points run from the receiving element over the reflection points to the UE
struct SpecularPath
{
    std::vector<Vec3> points;
    double length = 0.0; // m
    double delay = 0.0;  // s
};

// component_id -> per-element flag (1 = visible)
using VisibilityMask = std::map<std::string, std::vector<std::uint8_t>>;

// Throws GeometryError naming the facet if any facet invariant is violated
void validate(const Facet &facet);
void validate(const EnvironmentModel &env);

// Facet with precomputed plane and 2-D projection, used by all ray queries
class PreparedFacet
{
public:
    explicit PreparedFacet(const Facet &facet);

    const Facet &facet() const { return *facet_; }
    const Vec3 &normal() const { return normal_; }
    double offset() const { return offset_; }

    // Signed distance of p to the supporting plane
    double signed_distance(const Vec3 &p) const { return dot(normal_, p) - offset_; }

    // True if p (assumed on the plane) lies inside the polygon or within plane_tolerance of its boundary
    bool contains(const Vec3 &p) const;

    Vec3 mirror(const Vec3 &p) const { return p - normal_ * (2.0 * signed_distance(p)); }

private:
    const Facet *facet_;
    Vec3 normal_;
    double offset_ = 0.0;
    int drop_axis_ = 2;
    std::vector<double> u_, v_; // projected vertices
};

// Immutable view of an environment with prepared facets. The environment must outlive the scene.
class Scene
{
public:
    explicit Scene(const EnvironmentModel &env);

    const EnvironmentModel &environment() const { return *env_; }
    const std::vector<PreparedFacet> &facets() const { return facets_; }
    const PreparedFacet &facet(const std::string &id) const;

    // Component label used for a facet ("name" if unique in the scene, else "id")
    const std::string &label(const std::string &facet_id) const;

    // True if the open segment a-b crosses any facet, ignoring hits within occlusion_tolerance of a or b
    bool occluded(const Vec3 &a, const Vec3 &b) const;

private:
    const EnvironmentModel *env_;
    std::vector<PreparedFacet> facets_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::string> labels_;
};

// Reflection of p across the supporting plane of the facet
Vec3 mirror_point(const Vec3 &p, const Facet &facet);

// Direct path plus every chain of facets without consecutive repeats up to max_order (0, 1 or 2).
// Ordered by chain order, then by facet order in the environment.
std::vector<ImageSource> compute_image_sources(const Scene &scene, const Vec3 &ue, int max_order);
std::vector<ImageSource> compute_image_sources(const EnvironmentModel &env, const Vec3 &ue, int max_order);

// Unfolds the path from rx towards the image source. Returns nothing if a reflection point
// misses its facet or any segment is blocked.
std::optional<SpecularPath> trace_specular_path(const Scene &scene, const ImageSource &src, const Vec3 &rx);
std::optional<SpecularPath> trace_specular_path(const EnvironmentModel &env, const ImageSource &src, const Vec3 &rx);

// Per-element visibility for every source. jobs <= 0 uses the OpenMP default.
VisibilityMask visibility_mask(const Scene &scene, std::span<const Vec3> element_positions,
                               std::span<const ImageSource> sources, int jobs = 0);
VisibilityMask visibility_mask(const EnvironmentModel &env, const Vec3 &ue, std::span<const Vec3> element_positions,
                               std::span<const ImageSource> sources, int jobs = 0);

} // namespace pla

#endif
