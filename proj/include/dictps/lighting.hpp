// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <stdexcept>
#include <vector>

#include "dictps/geometry.hpp"

namespace dictps {

/// Calibrated distant point lights: Q unit directions with per-light
/// brightness (default 1).
struct LightingRig {
  std::vector<Vec3> directions;
  std::vector<double> intensities;

  int size() const { return static_cast<int>(directions.size()); }

  void validate() const {
    if (directions.empty()) {
      throw std::invalid_argument("LightingRig: needs at least one light");
    }
    if (intensities.size() != directions.size()) {
      throw std::invalid_argument("LightingRig: intensity count mismatch");
    }
    for (const Vec3& d : directions) require_unit(d, "light direction");
    for (double s : intensities) {
      if (!(s > 0.0)) {
        throw std::invalid_argument("LightingRig: intensities must be > 0");
      }
    }
  }

  static LightingRig uniform(std::vector<Vec3> dirs) {
    LightingRig rig;
    rig.intensities.assign(dirs.size(), 1.0);
    rig.directions = std::move(dirs);
    rig.validate();
    return rig;
  }
};

/// Q random unit directions on the upper hemisphere (uniform by area),
/// intensities 1. Deterministic for a fixed seed.
inline LightingRig random_hemisphere_rig(int q, std::uint64_t seed) {
  if (q < 1) throw std::invalid_argument("random_hemisphere_rig: q >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    const double z = uni(rng);
    const double phi = 2.0 * kPi * uni(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    dirs.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
  }
  return LightingRig::uniform(std::move(dirs));
}

}  // namespace dictps
