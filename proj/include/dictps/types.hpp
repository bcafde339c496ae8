// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dictps/geometry.hpp"

namespace dictps {

/// Intensity profile observed at one pixel: Q rows (one per light), one
/// column per color channel. Values are non-negative and finite.
struct PixelObservation {
  Eigen::MatrixXd intensities;  // Q x channels
  int x = 0;
  int y = 0;

  int lights() const { return static_cast<int>(intensities.rows()); }
  int channels() const { return static_cast<int>(intensities.cols()); }
};

/// Per-pixel unit normals with a validity mask.
struct NormalField {
  int width = 0;
  int height = 0;
  std::vector<Vec3> normals;
  std::vector<std::uint8_t> mask;

  NormalField() = default;
  NormalField(int w, int h)
      : width(w), height(h),
        normals(static_cast<std::size_t>(w) * h, Vec3::UnitZ()),
        mask(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  bool valid(int x, int y) const { return mask[idx(x, y)] != 0; }
};

/// Per-pixel, per-channel abundance vectors over M dictionary atoms, plus the
/// solve diagnostics carried along for reporting.
struct AbundanceField {
  int width = 0;
  int height = 0;
  int atoms = 0;
  int channels = 0;
  double lambda_factor = 0.0;
  std::vector<double> coefficients;       // [y][x][channel][atom]
  std::vector<double> residuals;          // [y][x][channel]
  std::vector<std::uint8_t> mask;
  std::vector<std::uint8_t> certified;    // per pixel: all channel solves certified

  AbundanceField() = default;
  AbundanceField(int w, int h, int m, int c)
      : width(w), height(h), atoms(m), channels(c),
        coefficients(static_cast<std::size_t>(w) * h * m * c, 0.0),
        residuals(static_cast<std::size_t>(w) * h * c, 0.0),
        mask(static_cast<std::size_t>(w) * h, 0),
        certified(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t pixel(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
  double* coeffs_at(int x, int y, int ch) {
    return coefficients.data() + (pixel(x, y) * channels + ch) * atoms;
  }
  const double* coeffs_at(int x, int y, int ch) const {
    return coefficients.data() + (pixel(x, y) * channels + ch) * atoms;
  }
};

/// Depth values on a masked domain, defined up to an additive constant.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> mask;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, 0.0),
        mask(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * width + x;
  }
};

}  // namespace dictps
