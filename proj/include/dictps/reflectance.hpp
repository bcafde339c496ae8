// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "dictps/brdf.hpp"
#include "dictps/nnls.hpp"
#include "dictps/parallel.hpp"
#include "dictps/render.hpp"
#include "dictps/types.hpp"

namespace dictps {

/// Per-channel abundance estimate at one pixel.
struct PixelBrdfEstimate {
  Eigen::MatrixXd coefficients;  // M x channels
  Eigen::VectorXd residuals;     // per channel, ||y - B c||
  Eigen::VectorXd kkt_gaps;
  Eigen::VectorXd lambdas;       // effective per-channel lambda
  bool certified = true;
};

/// How the sparsity weight is chosen. The effective per-pixel lambda is
/// factor * ||B^T y||_inf, so the penalty tracks the data scale; kFixedValue
/// bypasses that and uses `value` directly.
struct LambdaPolicy {
  enum class Mode { kFixedValue, kFactor } mode = Mode::kFactor;
  double value = 0.0;

  double effective(double bty_inf) const {
    return mode == Mode::kFixedValue ? value : value * bty_inf;
  }
};

/// Sparse non-negative BRDF fit at one pixel against the dictionary rendered
/// exactly at `normal` (not snapped to a candidate).
inline PixelBrdfEstimate estimate_brdf_pixel(const PixelObservation& obs,
                                             const Vec3& normal,
                                             const Dictionary& dict,
                                             const LightingRig& rig,
                                             const Vec3& view,
                                             const LambdaPolicy& lambda,
                                             double tol = 1e-9) {
  if (obs.lights() != rig.size()) {
    throw std::invalid_argument("estimate_brdf_pixel: light count mismatch");
  }
  if (obs.channels() != dict.channels()) {
    throw std::invalid_argument("estimate_brdf_pixel: channel mismatch");
  }
  const auto mats = render_pixel_matrices(dict, normal, rig, view);

  PixelBrdfEstimate out;
  out.coefficients.resize(dict.size(), dict.channels());
  out.residuals.resize(dict.channels());
  out.kkt_gaps.resize(dict.channels());
  out.lambdas.resize(dict.channels());
  NnlsWorkspace ws;
  for (int ch = 0; ch < dict.channels(); ++ch) {
    const Eigen::VectorXd y = obs.intensities.col(ch);
    const double scale = (mats[static_cast<std::size_t>(ch)].transpose() * y)
                             .cwiseAbs()
                             .maxCoeff();
    const double lam = lambda.effective(scale);
    const auto sol = nn_lasso(mats[static_cast<std::size_t>(ch)], y, lam, tol, ws);
    out.coefficients.col(ch) = sol.coefficients;
    out.residuals[ch] = sol.residual_norm;
    out.kkt_gaps[ch] = sol.kkt_gap;
    out.lambdas[ch] = lam;
    out.certified = out.certified && sol.certified;
  }
  return out;
}

/// Joint fit for pixels known to share one BRDF: intensity profiles and their
/// B matrices are stacked into a single system per channel.
inline PixelBrdfEstimate estimate_brdf_pooled(
    std::span<const PixelObservation> observations,
    std::span<const Vec3> normals, const Dictionary& dict,
    const LightingRig& rig, const Vec3& view, const LambdaPolicy& lambda,
    double tol = 1e-9) {
  if (observations.empty() || observations.size() != normals.size()) {
    throw std::invalid_argument("estimate_brdf_pooled: bad group");
  }
  const int q = rig.size();
  const int n = static_cast<int>(observations.size());
  for (const auto& obs : observations) {
    if (obs.lights() != q || obs.channels() != dict.channels()) {
      throw std::invalid_argument("estimate_brdf_pooled: mixed observations");
    }
  }

  std::vector<Eigen::MatrixXd> stacked(
      static_cast<std::size_t>(dict.channels()),
      Eigen::MatrixXd(static_cast<Eigen::Index>(n) * q, dict.size()));
  Eigen::MatrixXd ys(static_cast<Eigen::Index>(n) * q, dict.channels());
  for (int g = 0; g < n; ++g) {
    const auto mats = render_pixel_matrices(
        dict, normals[static_cast<std::size_t>(g)], rig, view);
    for (int ch = 0; ch < dict.channels(); ++ch) {
      stacked[static_cast<std::size_t>(ch)].middleRows(
          static_cast<Eigen::Index>(g) * q, q) = mats[static_cast<std::size_t>(ch)];
      ys.col(ch).segment(static_cast<Eigen::Index>(g) * q, q) =
          observations[static_cast<std::size_t>(g)].intensities.col(ch);
    }
  }

  PixelBrdfEstimate out;
  out.coefficients.resize(dict.size(), dict.channels());
  out.residuals.resize(dict.channels());
  out.kkt_gaps.resize(dict.channels());
  out.lambdas.resize(dict.channels());
  NnlsWorkspace ws;
  for (int ch = 0; ch < dict.channels(); ++ch) {
    const Eigen::VectorXd y = ys.col(ch);
    const double scale = (stacked[static_cast<std::size_t>(ch)].transpose() * y)
                             .cwiseAbs()
                             .maxCoeff();
    const double lam = lambda.effective(scale);
    const auto sol =
        nn_lasso(stacked[static_cast<std::size_t>(ch)], y, lam, tol, ws);
    out.coefficients.col(ch) = sol.coefficients;
    out.residuals[ch] = sol.residual_norm;
    out.kkt_gaps[ch] = sol.kkt_gap;
    out.lambdas[ch] = lam;
    out.certified = out.certified && sol.certified;
  }
  return out;
}

/// Recovered BRDF table D c: the abundance-weighted sum of atom tables.
inline Brdf reconstruct_brdf(const Eigen::MatrixXd& coefficients,
                             const Dictionary& dict) {
  if (coefficients.rows() != dict.size() ||
      coefficients.cols() != dict.channels()) {
    throw std::invalid_argument("reconstruct_brdf: coefficient shape mismatch");
  }
  if ((coefficients.array() < 0.0).any()) {
    throw std::invalid_argument("reconstruct_brdf: coefficients must be >= 0");
  }
  Brdf out(dict.channels(), "reconstructed");
  for (int ch = 0; ch < dict.channels(); ++ch) {
    auto table = out.channel(ch);
    for (int j = 0; j < dict.size(); ++j) {
      const double c = coefficients(j, ch);
      if (c == 0.0) continue;
      auto atom = dict.atom(j).channel(ch);
      for (int i = 0; i < BrdfGrid::kSamples; ++i) {
        table[static_cast<std::size_t>(i)] +=
            c * atom[static_cast<std::size_t>(i)];
      }
    }
  }
  return out;
}

inline Brdf reconstruct_brdf(const Eigen::VectorXd& coefficients,
                             const Dictionary& dict) {
  if (dict.channels() != 1) {
    throw std::invalid_argument(
        "reconstruct_brdf: per-channel coefficients required for color");
  }
  return reconstruct_brdf(Eigen::MatrixXd(coefficients), dict);
}

/// Picks the sparsity factor from a small grid by held-out-light validation
/// over sample pixels: fit on 4/5 of the lights, score on the remaining fifth.
inline double choose_lambda_factor(std::span<const PixelObservation> sample,
                                   std::span<const Vec3> normals,
                                   const Dictionary& dict,
                                   const LightingRig& rig, const Vec3& view,
                                   double tol = 1e-9) {
  static constexpr double kFactors[] = {0.0, 1e-3, 1e-2, 1e-1};
  if (sample.empty() || sample.size() != normals.size()) {
    throw std::invalid_argument("choose_lambda_factor: bad sample");
  }
  const int q = rig.size();
  std::vector<int> test_rows, train_rows;
  for (int i = 0; i < q; ++i) {
    (i % 5 == 0 ? test_rows : train_rows).push_back(i);
  }
  if (train_rows.empty() || test_rows.empty()) return 0.0;

  double best_sse = std::numeric_limits<double>::infinity();
  double best_factor = 0.0;
  NnlsWorkspace ws;
  for (double factor : kFactors) {
    double sse = 0.0;
    for (std::size_t s = 0; s < sample.size(); ++s) {
      const auto mats = render_pixel_matrices(dict, normals[s], rig, view);
      for (int ch = 0; ch < dict.channels(); ++ch) {
        const auto& B = mats[static_cast<std::size_t>(ch)];
        Eigen::MatrixXd Btr(static_cast<Eigen::Index>(train_rows.size()),
                            dict.size());
        Eigen::VectorXd ytr(static_cast<Eigen::Index>(train_rows.size()));
        for (std::size_t r = 0; r < train_rows.size(); ++r) {
          Btr.row(static_cast<Eigen::Index>(r)) =
              B.row(train_rows[r]);
          ytr[static_cast<Eigen::Index>(r)] =
              sample[s].intensities(train_rows[r], ch);
        }
        const double scale = (Btr.transpose() * ytr).cwiseAbs().maxCoeff();
        const auto sol = nn_lasso(Btr, ytr, factor * scale, tol, ws);
        for (int row : test_rows) {
          const double pred = B.row(row) * sol.coefficients;
          const double diff = sample[s].intensities(row, ch) - pred;
          sse += diff * diff;
        }
      }
    }
    if (sse < best_sse - 1e-15 * std::abs(best_sse)) {
      best_sse = sse;
      best_factor = factor;
    }
  }
  return best_factor;
}

/// Per-pixel sparse BRDF recovery over a whole image; masked-in pixels only.
/// Solver failures are annotated with the pixel coordinates.
inline AbundanceField estimate_abundance_field(
    const std::vector<Image>& stack, const NormalField& normals,
    const Dictionary& dict, const LightingRig& rig, const Vec3& view,
    const LambdaPolicy& lambda, double tol = 1e-9, unsigned threads = 0) {
  if (stack.empty() || static_cast<int>(stack.size()) != rig.size()) {
    throw std::invalid_argument("estimate_abundance_field: stack/rig mismatch");
  }
  const int w = normals.width;
  const int h = normals.height;
  const int channels = stack.front().channels;
  if (stack.front().width != w || stack.front().height != h) {
    throw std::invalid_argument("estimate_abundance_field: size mismatch");
  }
  if (channels != dict.channels()) {
    throw std::invalid_argument("estimate_abundance_field: channel mismatch");
  }

  AbundanceField field(w, h, dict.size(), channels);
  field.lambda_factor =
      lambda.mode == LambdaPolicy::Mode::kFactor ? lambda.value : -1.0;
  const int q = rig.size();
  parallel_for(static_cast<std::size_t>(w) * h, threads, [&](std::size_t p) {
    if (!normals.mask[p]) return;
    const int x = static_cast<int>(p) % w;
    const int y = static_cast<int>(p) / w;
    PixelObservation obs;
    obs.x = x;
    obs.y = y;
    obs.intensities.resize(q, channels);
    for (int i = 0; i < q; ++i) {
      for (int ch = 0; ch < channels; ++ch) {
        obs.intensities(i, ch) = stack[static_cast<std::size_t>(i)].at(x, y, ch);
      }
    }
    try {
      const auto est = estimate_brdf_pixel(obs, normals.normals[p], dict, rig,
                                           view, lambda, tol);
      for (int ch = 0; ch < channels; ++ch) {
        double* c = field.coeffs_at(x, y, ch);
        for (int j = 0; j < dict.size(); ++j) c[j] = est.coefficients(j, ch);
        field.residuals[p * static_cast<std::size_t>(channels) +
                        static_cast<std::size_t>(ch)] = est.residuals[ch];
      }
      field.mask[p] = 1;
      field.certified[p] = est.certified ? 1 : 0;
    } catch (const std::exception& e) {
      throw std::runtime_error("estimate_abundance_field: pixel (" +
                               std::to_string(x) + ", " + std::to_string(y) +
                               "): " + e.what());
    }
  });
  return field;
}

}  // namespace dictps
