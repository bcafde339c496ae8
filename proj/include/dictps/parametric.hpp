// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "dictps/brdf.hpp"

namespace dictps {

struct LambertianParams {
  double albedo = 1.0;
};

struct WardParams {
  double rho_d = 0.5;   // diffuse reflectance
  double rho_s = 0.5;   // specular reflectance
  double alpha = 0.1;   // RMS slope of the specular lobe
};

struct CookTorranceParams {
  double roughness = 0.2;  // Beckmann m
  double f0 = 0.9;         // Fresnel reflectance at normal incidence
};

/// Isotropic Ward model. Zero below the horizon and at grazing denominators.
inline double eval_ward(const WardParams& p, const Vec3& light,
                        const Vec3& view, const Vec3& normal) {
  const double nl = normal.dot(light);
  const double nv = normal.dot(view);
  if (nl <= 1e-9 || nv <= 1e-9) return 0.0;
  double value = p.rho_d / kPi;
  if (p.rho_s > 0.0) {
    const Vec3 h = (light + view).normalized();
    const double cos_th = std::min(1.0, normal.dot(h));
    if (cos_th > 1e-9) {
      const double tan2 = (1.0 - cos_th * cos_th) / (cos_th * cos_th);
      value += p.rho_s * std::exp(-tan2 / (p.alpha * p.alpha)) /
               (4.0 * kPi * p.alpha * p.alpha * std::sqrt(nl * nv));
    }
  }
  return value;
}

/// Cook-Torrance with a Beckmann distribution, geometric attenuation term,
/// and Schlick Fresnel; 1982 normalization (pi in the denominator).
inline double eval_cook_torrance(const CookTorranceParams& p, const Vec3& light,
                                 const Vec3& view, const Vec3& normal) {
  const double nl = normal.dot(light);
  const double nv = normal.dot(view);
  if (nl <= 1e-9 || nv <= 1e-9) return 0.0;
  const Vec3 h = (light + view).normalized();
  const double nh = std::min(1.0, normal.dot(h));
  const double vh = std::min(1.0, view.dot(h));
  if (nh <= 1e-9 || vh <= 1e-9) return 0.0;
  const double m2 = p.roughness * p.roughness;
  const double nh2 = nh * nh;
  const double d = std::exp((nh2 - 1.0) / (m2 * nh2)) / (kPi * m2 * nh2 * nh2);
  const double g = std::min(1.0, std::min(2.0 * nh * nv / vh, 2.0 * nh * nl / vh));
  const double f = p.f0 + (1.0 - p.f0) * std::pow(1.0 - vh, 5.0);
  return f * d * g / (kPi * nl * nv);
}

namespace detail {

template <typename Eval>
Brdf fill_table(std::string name, Eval&& eval) {
  Brdf brdf(1, std::move(name));
  auto table = brdf.channel(0);
  const Vec3 normal = Vec3::UnitZ();
  for (int ih = 0; ih < BrdfGrid::kThetaH; ++ih) {
    for (int id = 0; id < BrdfGrid::kThetaD; ++id) {
      for (int ip = 0; ip < BrdfGrid::kPhiD; ++ip) {
        const HalfAngleCoords c{BrdfGrid::theta_h_node(ih),
                                BrdfGrid::theta_d_node(id),
                                BrdfGrid::phi_d_node(ip)};
        const auto dirs = canonical_directions(c);
        double v = 0.0;
        if (dirs.light.z() > 0.0 && dirs.view.z() > 0.0) {
          v = eval(dirs.light.normalized(), dirs.view.normalized(), normal);
        }
        if (!std::isfinite(v) || v < 0.0) v = 0.0;
        table[static_cast<std::size_t>(BrdfGrid::index(ih, id, ip))] = v;
      }
    }
  }
  return brdf;
}

inline std::string format_param(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

inline Brdf generate_lambertian(const LambertianParams& p) {
  if (p.albedo < 0.0) {
    throw std::invalid_argument("lambertian: albedo must be >= 0");
  }
  // Constant everywhere, including cells with no valid canonical directions,
  // so interpolated evaluation equals albedo/pi at any configuration.
  Brdf brdf(1, "lambertian_" + detail::format_param(p.albedo), p.albedo / kPi);
  return brdf;
}

inline Brdf generate_ward(const WardParams& p) {
  if (p.rho_d < 0.0 || p.rho_s < 0.0 || p.alpha <= 0.0) {
    throw std::invalid_argument("ward: need rho_d >= 0, rho_s >= 0, alpha > 0");
  }
  std::string name = "ward_d" + detail::format_param(p.rho_d) + "_s" +
                     detail::format_param(p.rho_s) + "_a" +
                     detail::format_param(p.alpha);
  return detail::fill_table(std::move(name),
                            [&p](const Vec3& l, const Vec3& v, const Vec3& n) {
                              return eval_ward(p, l, v, n);
                            });
}

inline Brdf generate_cook_torrance(const CookTorranceParams& p) {
  if (p.roughness <= 0.0 || p.f0 < 0.0 || p.f0 > 1.0) {
    throw std::invalid_argument(
        "cook-torrance: need roughness > 0 and f0 in [0, 1]");
  }
  std::string name = "cooktorrance_m" + detail::format_param(p.roughness) +
                     "_f" + detail::format_param(p.f0);
  return detail::fill_table(std::move(name),
                            [&p](const Vec3& l, const Vec3& v, const Vec3& n) {
                              return eval_cook_torrance(p, l, v, n);
                            });
}

}  // namespace dictps
