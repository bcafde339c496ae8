// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dictps/types.hpp"

namespace dictps {

inline constexpr double kIntegrationNzFloor = 0.05;

/// Least-squares (Poisson) integration of a unit-normal field into a depth
/// map on the masked domain. Gradients p = -nx/nz, q = -ny/nz are matched by
/// midpoint-rule forward differences; the result is zero-mean per connected
/// component.
inline DepthMap integrate_normals(const NormalField& normals,
                                  double nz_floor = kIntegrationNzFloor) {
  const int w = normals.width;
  const int h = normals.height;
  std::size_t valid = 0;
  for (std::size_t p = 0; p < normals.mask.size(); ++p) {
    if (!normals.mask[p]) continue;
    ++valid;
    if (normals.normals[p].z() <= nz_floor) {
      throw std::invalid_argument(
          "integrate_normals: normal too close to grazing (nz <= floor)");
    }
  }
  if (valid == 0) {
    throw std::invalid_argument("integrate_normals: empty mask");
  }

  // Unknown index per masked pixel.
  std::vector<int> unknown(normals.mask.size(), -1);
  int n = 0;
  for (std::size_t p = 0; p < normals.mask.size(); ++p) {
    if (normals.mask[p]) unknown[p] = n++;
  }

  auto grad = [&](std::size_t p) {
    const Vec3& nrm = normals.normals[p];
    return std::pair<double, double>{-nrm.x() / nrm.z(), -nrm.y() / nrm.z()};
  };

  // Normal equations of the edge-difference system (graph Laplacian).
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
  auto add_edge = [&](std::size_t pa, std::size_t pb, double target) {
    const int a = unknown[pa];
    const int b = unknown[pb];
    diag[static_cast<std::size_t>(a)] += 1.0;
    diag[static_cast<std::size_t>(b)] += 1.0;
    trip.emplace_back(a, b, -1.0);
    trip.emplace_back(b, a, -1.0);
    rhs[a] -= target;
    rhs[b] += target;
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t p = normals.idx(x, y);
      if (!normals.mask[p]) continue;
      if (x + 1 < w && normals.mask[p + 1]) {
        add_edge(p, p + 1, 0.5 * (grad(p).first + grad(p + 1).first));
      }
      if (y + 1 < h && normals.mask[p + static_cast<std::size_t>(w)]) {
        add_edge(p, p + static_cast<std::size_t>(w),
                 0.5 * (grad(p).second +
                        grad(p + static_cast<std::size_t>(w)).second));
      }
    }
  }

  // Connected components; pin one pixel of each to fix the gauge exactly.
  std::vector<int> component(static_cast<std::size_t>(n), -1);
  {
    std::vector<std::size_t> stack_mem;
    int comp = 0;
    for (std::size_t p = 0; p < normals.mask.size(); ++p) {
      if (!normals.mask[p] || component[static_cast<std::size_t>(unknown[p])] >= 0)
        continue;
      stack_mem.push_back(p);
      component[static_cast<std::size_t>(unknown[p])] = comp;
      while (!stack_mem.empty()) {
        const std::size_t cur = stack_mem.back();
        stack_mem.pop_back();
        const int cx = static_cast<int>(cur) % w;
        const int cy = static_cast<int>(cur) / w;
        const int dx[4] = {1, -1, 0, 0};
        const int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t np = normals.idx(nx, ny);
          if (!normals.mask[np]) continue;
          auto& c = component[static_cast<std::size_t>(unknown[np])];
          if (c < 0) {
            c = comp;
            stack_mem.push_back(np);
          }
        }
      }
      ++comp;
    }
    std::vector<char> pinned(static_cast<std::size_t>(comp), 0);
    for (int i = 0; i < n; ++i) {
      auto& flag = pinned[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])];
      if (!flag) {
        diag[static_cast<std::size_t>(i)] += 1.0;
        flag = 1;
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    trip.emplace_back(i, i, diag[static_cast<std::size_t>(i)]);
  }

  Eigen::SparseMatrix<double> laplacian(n, n);
  laplacian.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(laplacian);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("integrate_normals: factorization failed");
  }
  const Eigen::VectorXd z = solver.solve(rhs);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("integrate_normals: solve failed");
  }

  DepthMap out(w, h);
  out.mask = normals.mask;
  // Zero-mean per component.
  {
    int comps = 0;
    for (int i = 0; i < n; ++i) comps = std::max(comps, component[static_cast<std::size_t>(i)] + 1);
    std::vector<double> mean(static_cast<std::size_t>(comps), 0.0);
    std::vector<int> count(static_cast<std::size_t>(comps), 0);
    for (int i = 0; i < n; ++i) {
      mean[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])] += z[i];
      count[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])] += 1;
    }
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] /= count[c];
    for (std::size_t p = 0; p < normals.mask.size(); ++p) {
      if (!normals.mask[p]) continue;
      const int i = unknown[p];
      out.depth[p] =
          z[i] - mean[static_cast<std::size_t>(component[static_cast<std::size_t>(i)])];
    }
  }
  return out;
}

/// RMS difference after removing the best additive offset, divided by the
/// truth's depth range on the shared mask.
inline double relative_depth_error(const DepthMap& estimate,
                                   const DepthMap& truth) {
  if (estimate.width != truth.width || estimate.height != truth.height) {
    throw std::invalid_argument("relative_depth_error: size mismatch");
  }
  double offset = 0.0;
  std::size_t n = 0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < truth.mask.size(); ++p) {
    if (!truth.mask[p] || !estimate.mask[p]) continue;
    offset += estimate.depth[p] - truth.depth[p];
    lo = std::min(lo, truth.depth[p]);
    hi = std::max(hi, truth.depth[p]);
    ++n;
  }
  if (n == 0) {
    throw std::invalid_argument("relative_depth_error: empty shared mask");
  }
  offset /= static_cast<double>(n);
  double sse = 0.0;
  for (std::size_t p = 0; p < truth.mask.size(); ++p) {
    if (!truth.mask[p] || !estimate.mask[p]) continue;
    const double d = estimate.depth[p] - truth.depth[p] - offset;
    sse += d * d;
  }
  const double range = hi - lo;
  const double rms = std::sqrt(sse / static_cast<double>(n));
  return range > 0.0 ? rms / range : rms;
}

/// Grid-triangulated OBJ export of a masked depth map, for visualization.
inline void write_obj(const DepthMap& depth, const std::filesystem::path& path,
                      double xy_scale = 1.0) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("write_obj: cannot open " + path.string());
  std::vector<int> vertex(depth.mask.size(), 0);
  int next = 1;
  for (int y = 0; y < depth.height; ++y) {
    for (int x = 0; x < depth.width; ++x) {
      const std::size_t p = depth.idx(x, y);
      if (!depth.mask[p]) continue;
      vertex[p] = next++;
      out << "v " << x * xy_scale << " " << y * xy_scale << " " << depth.depth[p]
          << "\n";
    }
  }
  for (int y = 0; y + 1 < depth.height; ++y) {
    for (int x = 0; x + 1 < depth.width; ++x) {
      const int a = vertex[depth.idx(x, y)];
      const int b = vertex[depth.idx(x + 1, y)];
      const int c = vertex[depth.idx(x, y + 1)];
      const int d = vertex[depth.idx(x + 1, y + 1)];
      if (a && b && c) out << "f " << a << " " << b << " " << c << "\n";
      if (b && d && c) out << "f " << b << " " << d << " " << c << "\n";
    }
  }
}

}  // namespace dictps
