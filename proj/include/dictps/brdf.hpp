// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dictps/geometry.hpp"

namespace dictps {

/// Tabulation grid for isotropic BRDFs in half-angle coordinates.
///
/// Follows the MERL convention: theta_h is warped by a square root so the
/// table oversamples the specular peak (continuous index u = 90*sqrt(th/(pi/2)),
/// integer part selects the lower node), theta_d and phi_d are linear at 1
/// degree. phi_d is stored on [0, pi) only; Helmholtz reciprocity folds the
/// other half onto it.
struct BrdfGrid {
  static constexpr int kThetaH = 90;
  static constexpr int kThetaD = 90;
  static constexpr int kPhiD = 180;
  static constexpr int kSamples = kThetaH * kThetaD * kPhiD;  // 1,458,000

  static int index(int ih, int id, int ip) {
    return (ih * kThetaD + id) * kPhiD + ip;
  }

  // Continuous grid coordinates; integer part = lower node, fraction = lerp weight.
  static double theta_h_coord(double th) {
    return kThetaH * std::sqrt(std::max(0.0, th) / (kPi / 2.0));
  }
  static double theta_d_coord(double td) { return td / (kPi / 2.0) * kThetaD; }
  static double phi_d_coord(double pd) { return pd / kPi * kPhiD; }

  // Node angle values (inverse of the coordinate maps at integers).
  static double theta_h_node(int i) {
    const double u = static_cast<double>(i) / kThetaH;
    return (kPi / 2.0) * u * u;
  }
  static double theta_d_node(int j) {
    return (kPi / 2.0) * static_cast<double>(j) / kThetaD;
  }
  static double phi_d_node(int k) {
    return kPi * static_cast<double>(k) / kPhiD;
  }
};

/// Rusinkiewicz half-angle coordinates of one scattering configuration.
struct HalfAngleCoords {
  double theta_h;  // angle(half vector, normal), [0, pi/2)
  double theta_d;  // angle(light, half vector), [0, pi/2)
  double phi_d;    // azimuth of the light about the half vector, folded to [0, pi)
};

/// Converts a front-facing (light, view, normal) configuration to half-angle
/// coordinates. The phi_d reference direction is the projection of the normal
/// onto the half vector's orthogonal plane; when that projection degenerates
/// (theta_h ~ 0) a fixed global axis is projected instead, and phi_d = 0 when
/// the light itself is parallel to the half vector (theta_d ~ 0).
inline HalfAngleCoords to_half_angle(const Vec3& light, const Vec3& view,
                                     const Vec3& normal) {
  require_unit(light, "light");
  require_unit(view, "view");
  require_unit(normal, "normal");
  if (normal.dot(light) <= 0.0 || normal.dot(view) <= 0.0) {
    throw std::invalid_argument("to_half_angle: back-facing configuration");
  }

  const Vec3 h = (light + view).normalized();
  const double theta_h = angle_between(h, normal);
  const double theta_d = angle_between(light, h);

  Vec3 t = normal - normal.dot(h) * h;
  if (t.squaredNorm() < 1e-24) {
    t = Vec3::UnitX() - h.x() * h;
    if (t.squaredNorm() < 1e-24) t = Vec3::UnitY() - h.y() * h;
  }
  t.normalize();
  const Vec3 b = h.cross(t);

  const double px = light.dot(t);
  const double py = light.dot(b);
  double phi_d = 0.0;
  if (px * px + py * py >= 1e-24) {
    phi_d = std::atan2(py, px);
    if (phi_d < 0.0) phi_d += kPi;   // reciprocity fold
    if (phi_d >= kPi) phi_d -= kPi;  // seam guard
    if (phi_d < 0.0) phi_d = 0.0;
  }
  return {theta_h, theta_d, phi_d};
}

/// Canonical (light, view) pair with normal = +z that reproduces the given
/// half-angle coordinates. Used to fill parametric tables and to reconstruct
/// the incident elevation of a grid cell.
struct CanonicalDirections {
  Vec3 light;
  Vec3 view;
};

inline CanonicalDirections canonical_directions(const HalfAngleCoords& c) {
  const double sh = std::sin(c.theta_h), ch = std::cos(c.theta_h);
  const double sd = std::sin(c.theta_d), cd = std::cos(c.theta_d);
  const Vec3 h(sh, 0.0, ch);
  // Difference vector in the half-vector frame, rotated back about +y.
  const Vec3 d(sd * std::cos(c.phi_d), sd * std::sin(c.phi_d), cd);
  const Vec3 l(ch * d.x() + sh * d.z(), d.y(), -sh * d.x() + ch * d.z());
  const Vec3 v = 2.0 * h.dot(l) * h - l;
  return {l, v};
}

/// Cosine of the incident elevation for a grid cell's canonical configuration.
inline double incident_cosine(const HalfAngleCoords& c) {
  // z-component of canonical_directions(c).light, expanded.
  return std::cos(c.theta_h) * std::cos(c.theta_d) -
         std::sin(c.theta_h) * std::sin(c.theta_d) * std::cos(c.phi_d);
}

/// Linear functional that samples a tabulated BRDF at one configuration:
/// trilinear interpolation weights over the (theta_h, theta_d, phi_d) grid.
/// Weights are non-negative and sum to one.
class SamplingFunctional {
 public:
  struct Tap {
    int index;
    double weight;
  };

  SamplingFunctional() = default;

  void add(int index, double weight) { taps_[count_++] = {index, weight}; }

  std::span<const Tap> taps() const { return {taps_.data(), count_}; }

  double apply(std::span<const double> table) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < count_; ++i) {
      acc += taps_[i].weight * table[static_cast<std::size_t>(taps_[i].index)];
    }
    return acc;
  }

 private:
  std::array<Tap, 8> taps_{};
  std::size_t count_ = 0;
};

namespace detail {

struct AxisTap {
  int i0, i1;
  double f;  // weight of i1; (1 - f) goes to i0
};

inline AxisTap clamped_axis(double u, int n) {
  int i0 = std::min(static_cast<int>(u), n - 1);
  double f = u - i0;
  int i1 = i0 + 1;
  if (i1 >= n) {  // clamp: collapse onto the last node
    i1 = n - 1;
    f = 0.0;
  }
  return {i0, i1, f};
}

inline AxisTap wrapped_axis(double u, int n) {
  const int i0 = std::min(static_cast<int>(u), n - 1);
  return {i0, (i0 + 1) % n, u - i0};
}

}  // namespace detail

inline SamplingFunctional sampling_functional(const HalfAngleCoords& c) {
  const auto ah = detail::clamped_axis(BrdfGrid::theta_h_coord(c.theta_h),
                                       BrdfGrid::kThetaH);
  const auto ad = detail::clamped_axis(BrdfGrid::theta_d_coord(c.theta_d),
                                       BrdfGrid::kThetaD);
  const auto ap =
      detail::wrapped_axis(BrdfGrid::phi_d_coord(c.phi_d), BrdfGrid::kPhiD);

  SamplingFunctional s;
  const double wh[2] = {1.0 - ah.f, ah.f};
  const double wd[2] = {1.0 - ad.f, ad.f};
  const double wp[2] = {1.0 - ap.f, ap.f};
  const int ih[2] = {ah.i0, ah.i1};
  const int id[2] = {ad.i0, ad.i1};
  const int ip[2] = {ap.i0, ap.i1};
  for (int a = 0; a < 2; ++a) {
    if (wh[a] == 0.0 || (a == 1 && ih[1] == ih[0])) continue;
    for (int b = 0; b < 2; ++b) {
      if (wd[b] == 0.0 || (b == 1 && id[1] == id[0])) continue;
      for (int d = 0; d < 2; ++d) {
        if (wp[d] == 0.0) continue;
        s.add(BrdfGrid::index(ih[a], id[b], ip[d]), wh[a] * wd[b] * wp[d]);
      }
    }
  }
  return s;
}

inline SamplingFunctional sampling_functional(const Vec3& light,
                                              const Vec3& view,
                                              const Vec3& normal) {
  return sampling_functional(to_half_angle(light, view, normal));
}

/// Tabulated isotropic BRDF: 90 x 90 x 180 reflectance samples per channel,
/// immutable once built. All stored values are >= 0.
class Brdf {
 public:
  Brdf() = default;

  Brdf(int channels, std::string name, double fill = 0.0)
      : channels_(channels), name_(std::move(name)) {
    if (channels != 1 && channels != 3) {
      throw std::invalid_argument("Brdf: channels must be 1 or 3");
    }
    values_.assign(static_cast<std::size_t>(channels) * BrdfGrid::kSamples,
                   fill);
  }

  int channels() const { return channels_; }
  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }

  std::span<const double> channel(int ch) const {
    check_channel(ch);
    return {values_.data() + static_cast<std::size_t>(ch) * BrdfGrid::kSamples,
            static_cast<std::size_t>(BrdfGrid::kSamples)};
  }
  std::span<double> channel(int ch) {
    check_channel(ch);
    return {values_.data() + static_cast<std::size_t>(ch) * BrdfGrid::kSamples,
            static_cast<std::size_t>(BrdfGrid::kSamples)};
  }

  double value(int ch, int i) const { return channel(ch)[static_cast<std::size_t>(i)]; }

  const std::vector<double>& raw() const { return values_; }
  std::vector<double>& raw() { return values_; }

  bool same_shape(const Brdf& other) const {
    return channels_ == other.channels_;
  }

  /// Interpolated reflectance at a front-facing configuration.
  double evaluate(const Vec3& light, const Vec3& view, const Vec3& normal,
                  int ch) const {
    check_channel(ch);
    return sampling_functional(light, view, normal).apply(channel(ch));
  }

  double evaluate(const HalfAngleCoords& c, int ch) const {
    check_channel(ch);
    return sampling_functional(c).apply(channel(ch));
  }

  /// Gray table replicated to three channels (for MERL export of gray pipelines).
  Brdf expand_to_rgb() const {
    if (channels_ == 3) return *this;
    Brdf out(3, name_);
    for (int ch = 0; ch < 3; ++ch) {
      std::copy(values_.begin(), values_.end(), out.channel(ch).begin());
    }
    return out;
  }

 private:
  void check_channel(int ch) const {
    if (ch < 0 || ch >= channels_) {
      throw std::out_of_range("Brdf: channel out of range");
    }
  }

  int channels_ = 0;
  std::string name_;
  std::vector<double> values_;
};

/// Ordered set of dictionary atoms sharing channel count.
class Dictionary {
 public:
  Dictionary() = default;

  explicit Dictionary(std::vector<Brdf> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) {
      throw std::invalid_argument("Dictionary: needs at least one atom");
    }
    for (const auto& a : atoms_) {
      if (a.channels() != atoms_.front().channels()) {
        throw std::invalid_argument("Dictionary: mixed channel counts");
      }
    }
  }

  int size() const { return static_cast<int>(atoms_.size()); }
  int channels() const { return atoms_.front().channels(); }
  const Brdf& atom(int j) const { return atoms_.at(static_cast<std::size_t>(j)); }
  const std::vector<Brdf>& atoms() const { return atoms_; }

 private:
  std::vector<Brdf> atoms_;
};

}  // namespace dictps
