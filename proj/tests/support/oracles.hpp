// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0
//
// Test-only reference implementations, kept independent of the library code
// paths they are used to check.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "dictps/brdf.hpp"
#include "dictps/geometry.hpp"

namespace oracles {

using dictps::kPi;
using dictps::Vec3;

// --- Rusinkiewicz half-angle transform via explicit rotation matrices -------

inline Eigen::Matrix3d rotation_about(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

struct HalfAngleRef {
  double theta_h, theta_d, phi_d;  // phi_d already folded into [0, pi)
};

// Builds the rotation taking `normal` to the +z pole, then peels off the half
// vector's azimuth and elevation to express the light in the half-vector
// frame, exactly as the classic tabulation code does.
inline HalfAngleRef half_angle_by_rotation(const Vec3& light, const Vec3& view,
                                           const Vec3& normal) {
  Eigen::Matrix3d to_pole = Eigen::Matrix3d::Identity();
  const Vec3 z = Vec3::UnitZ();
  const Vec3 axis = normal.cross(z);
  const double s = axis.norm();
  if (s > 1e-14) {
    to_pole = rotation_about(axis / s, std::atan2(s, normal.dot(z)));
  } else if (normal.dot(z) < 0.0) {
    to_pole = rotation_about(Vec3::UnitX(), kPi);
  }

  const Vec3 l = to_pole * light;
  const Vec3 v = to_pole * view;
  const Vec3 h = (l + v).normalized();
  const double theta_h = std::acos(std::clamp(h.z(), -1.0, 1.0));
  const double phi_h = std::atan2(h.y(), h.x());

  const Vec3 d = rotation_about(Vec3::UnitY(), -theta_h) *
                 (rotation_about(Vec3::UnitZ(), -phi_h) * l);
  const double theta_d = std::acos(std::clamp(d.z(), -1.0, 1.0));
  double phi_d = std::atan2(d.y(), d.x());
  phi_d = std::fmod(phi_d + 2.0 * kPi, kPi);
  return {theta_h, theta_d, phi_d};
}

// Distance between two angles on the circle of circumference `period`.
inline double circular_distance(double a, double b, double period) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

// --- Dense trilinear interpolation over the MERL grid -----------------------

inline double trilinear_reference(std::span<const double> table,
                                  const dictps::HalfAngleCoords& c) {
  using dictps::BrdfGrid;
  const double uh = BrdfGrid::kThetaH * std::sqrt(c.theta_h / (kPi / 2.0));
  const double ud = c.theta_d / (kPi / 2.0) * BrdfGrid::kThetaD;
  const double up = c.phi_d / kPi * BrdfGrid::kPhiD;

  double value = 0.0;
  const int ih = std::min(static_cast<int>(uh), BrdfGrid::kThetaH - 1);
  const int id = std::min(static_cast<int>(ud), BrdfGrid::kThetaD - 1);
  const int ip = std::min(static_cast<int>(up), BrdfGrid::kPhiD - 1);
  const double fh = uh - ih, fd = ud - id, fp = up - ip;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int d = 0; d < 2; ++d) {
        const int jh = std::min(ih + a, BrdfGrid::kThetaH - 1);
        const int jd = std::min(id + b, BrdfGrid::kThetaD - 1);
        const int jp = (ip + d) % BrdfGrid::kPhiD;
        const double wgt = (a ? fh : 1.0 - fh) * (b ? fd : 1.0 - fd) *
                           (d ? fp : 1.0 - fp);
        value += wgt * table[static_cast<std::size_t>(
                     BrdfGrid::index(jh, jd, jp))];
      }
    }
  }
  return value;
}

// --- Random front-facing configurations -------------------------------------

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(gauss(rng), gauss(rng), gauss(rng));
  } while (v.norm() < 1e-3);
  return v.normalized();
}

struct Configuration {
  Vec3 light, view, normal;
};

// Uniformly random unit normal with front-facing light and view directions
// (dot products bounded away from zero by `margin`).
inline Configuration random_configuration(std::mt19937_64& rng,
                                          double margin = 1e-3) {
  Configuration c;
  c.normal = random_unit(rng);
  do {
    c.light = random_unit(rng);
  } while (c.light.dot(c.normal) <= margin);
  do {
    c.view = random_unit(rng);
  } while (c.view.dot(c.normal) <= margin);
  return c;
}

// --- NNLS via exhaustive support enumeration --------------------------------

// Minimum of ||y - B c||^2 over c >= 0 by trying every support set; feasible
// unconstrained solutions on a support are global candidates. Exponential in
// columns, usable for M <= ~12.
inline double nnls_enumeration_objective(const Eigen::MatrixXd& B,
                                         const Eigen::VectorXd& y) {
  const int m = static_cast<int>(B.cols());
  double best = y.squaredNorm();  // empty support
  for (unsigned mask = 1; mask < (1u << m); ++mask) {
    std::vector<int> cols;
    for (int j = 0; j < m; ++j) {
      if (mask & (1u << j)) cols.push_back(j);
    }
    Eigen::MatrixXd sub(B.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = B.col(cols[k]);
    }
    const Eigen::VectorXd z =
        sub.colPivHouseholderQr().solve(y);
    if ((z.array() < -1e-12).any()) continue;
    const double obj = (y - sub * z).squaredNorm();
    best = std::min(best, obj);
  }
  return best;
}

// --- FISTA oracle for the non-negative lasso --------------------------------

// Accelerated projected gradient on f(c) = ||y - Bc||^2 + lambda 1'c, run to a
// tight gradient-map tolerance. Independent first-order route.
inline Eigen::VectorXd nn_lasso_fista(const Eigen::MatrixXd& B,
                                      const Eigen::VectorXd& y, double lambda,
                                      int max_iter = 200000,
                                      double grad_tol = 1e-12) {
  const Eigen::MatrixXd gram = B.transpose() * B;
  const Eigen::VectorXd bty = B.transpose() * y;
  const double lip =
      2.0 * Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram)
                .eigenvalues()
                .maxCoeff();
  const double step = lip > 0.0 ? 1.0 / lip : 1.0;
  const double scale = std::max(1.0, bty.cwiseAbs().maxCoeff());

  Eigen::VectorXd x = Eigen::VectorXd::Zero(B.cols());
  Eigen::VectorXd v = x;
  double t = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad =
        2.0 * (gram * v - bty) + Eigen::VectorXd::Constant(B.cols(), lambda);
    Eigen::VectorXd xn = (v - step * grad).cwiseMax(0.0);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    v = xn + ((t - 1.0) / tn) * (xn - x);
    const double move = (xn - x).norm();
    x = std::move(xn);
    t = tn;
    if (move <= grad_tol * scale * step) break;
  }
  return x;
}

inline double nn_lasso_objective(const Eigen::MatrixXd& B,
                                 const Eigen::VectorXd& y, double lambda,
                                 const Eigen::VectorXd& c) {
  return (y - B * c).squaredNorm() + lambda * c.sum();
}

}  // namespace oracles
