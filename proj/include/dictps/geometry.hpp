// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace dictps {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

inline bool is_unit(const Vec3& v, double tol = 1e-8) {
  return std::abs(v.norm() - 1.0) <= tol;
}

inline void require_unit(const Vec3& v, const char* what) {
  if (!is_unit(v)) {
    throw std::invalid_argument(std::string(what) + " must be unit-norm");
  }
}

/// Angle in radians between two unit vectors, robust near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

inline double angle_between_deg(const Vec3& a, const Vec3& b) {
  return rad2deg(angle_between(a, b));
}

/// Direction from spherical coordinates: polar angle theta from +z, azimuth phi from +x.
inline Vec3 spherical_dir(double theta, double phi) {
  const double st = std::sin(theta);
  return Vec3(st * std::cos(phi), st * std::sin(phi), std::cos(theta));
}

}  // namespace dictps
