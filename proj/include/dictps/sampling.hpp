// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dictps/geometry.hpp"

namespace dictps {

/// Equi-angular sampling of the camera-facing unit hemisphere (nz >= 0).
struct CandidateSet {
  std::vector<Vec3> normals;
  double resolution_deg = 0.0;  // nominal angular spacing

  int size() const { return static_cast<int>(normals.size()); }
};

/// Latitude-ring construction: elevation rings spaced `resolution_deg` apart
/// from pole to equator; the ring at polar angle theta gets
/// ceil(360 sin(theta) / resolution_deg) equally spaced azimuths, the pole a
/// single candidate. An extra equator ring is appended when the leftover gap
/// is at least half the spacing, which preserves both the covering property
/// and the minimum pairwise separation.
inline CandidateSet equiangular_hemisphere(double resolution_deg) {
  if (!(resolution_deg > 0.0) || resolution_deg > 90.0) {
    throw std::invalid_argument(
        "equiangular_hemisphere: resolution must be in (0, 90]");
  }
  CandidateSet set;
  set.resolution_deg = resolution_deg;
  set.normals.emplace_back(0.0, 0.0, 1.0);  // pole

  std::vector<double> ring_elevations;
  const int full_rings = static_cast<int>(std::floor(90.0 / resolution_deg));
  for (int k = 1; k <= full_rings; ++k) {
    ring_elevations.push_back(k * resolution_deg);
  }
  const double last = ring_elevations.empty() ? 0.0 : ring_elevations.back();
  if (90.0 - last >= resolution_deg / 2.0 && last < 90.0) {
    ring_elevations.push_back(90.0);
  }

  for (double elev_deg : ring_elevations) {
    const double theta = deg2rad(elev_deg);
    const int count = static_cast<int>(
        std::ceil(360.0 * std::sin(theta) / resolution_deg));
    for (int m = 0; m < count; ++m) {
      const double phi = 2.0 * kPi * m / count;
      set.normals.push_back(spherical_dir(theta, phi));
    }
  }
  return set;
}

/// Candidates of `parent` within `half_angle_deg` of `center` (inclusive).
inline CandidateSet cone_subset(const CandidateSet& parent, const Vec3& center,
                                double half_angle_deg) {
  require_unit(center, "cone center");
  if (!(half_angle_deg > 0.0) || half_angle_deg > 180.0) {
    throw std::invalid_argument("cone_subset: half angle must be in (0, 180]");
  }
  CandidateSet subset;
  subset.resolution_deg = parent.resolution_deg;
  if (half_angle_deg >= 180.0) {
    subset.normals = parent.normals;
    return subset;
  }
  const double min_dot = std::cos(deg2rad(half_angle_deg));
  for (const Vec3& n : parent.normals) {
    if (n.dot(center) >= min_dot) subset.normals.push_back(n);
  }
  return subset;
}

/// Binary sidecar form used by the rendered-dictionary cache.
inline void write_candidates(std::ostream& out, const CandidateSet& set) {
  const std::int64_t n = set.size();
  out.write(reinterpret_cast<const char*>(&set.resolution_deg),
            sizeof(double));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const Vec3& v : set.normals) {
    const double xyz[3] = {v.x(), v.y(), v.z()};
    out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
}

inline CandidateSet read_candidates(std::istream& in) {
  CandidateSet set;
  std::int64_t n = 0;
  in.read(reinterpret_cast<char*>(&set.resolution_deg), sizeof(double));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || n < 0) throw std::runtime_error("read_candidates: bad stream");
  set.normals.resize(static_cast<std::size_t>(n));
  for (auto& v : set.normals) {
    double xyz[3];
    in.read(reinterpret_cast<char*>(xyz), sizeof(xyz));
    v = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  if (!in) throw std::runtime_error("read_candidates: truncated stream");
  return set;
}

}  // namespace dictps
