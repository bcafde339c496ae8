// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "dictps/image.hpp"
#include "dictps/nnls.hpp"
#include "dictps/parallel.hpp"
#include "dictps/render.hpp"
#include "dictps/types.hpp"

namespace dictps {

/// Coarse-to-fine search schedule: strictly decreasing angular spacings in
/// degrees; the last entry is the output resolution.
struct Schedule {
  std::vector<double> resolutions;

  void validate() const {
    if (resolutions.empty()) {
      throw std::invalid_argument("Schedule: needs at least one resolution");
    }
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
      if (!(resolutions[i] > 0.0)) {
        throw std::invalid_argument("Schedule: resolutions must be > 0");
      }
      if (i > 0 && resolutions[i] >= resolutions[i - 1]) {
        throw std::invalid_argument("Schedule: must be strictly decreasing");
      }
    }
  }

  static Schedule default_schedule() { return {{10.0, 5.0, 3.0, 1.0, 0.5}}; }
};

struct NormalEstimate {
  Vec3 normal = Vec3::UnitZ();
  double residual = 0.0;            // E at the winner, recomputed exactly
  long visited = 0;                 // candidates evaluated
  int candidate_index = -1;         // index within the final scanned set
  bool certified = true;            // winner's solve passed its KKT check
  std::vector<Vec3> schedule_trace; // per-level winners (coarse-to-fine only)
};

struct ScanOptions {
  std::span<const int> atom_subset{};  // empty = use every atom
  std::span<const int> rows{};         // empty = use every light
  double tol = 1e-9;
};

/// Per-thread scratch for the candidate scans.
struct EstimatorWorkspace {
  NnlsWorkspace qp;
  std::vector<double> h, gsub, bsub, ysub;
  std::vector<int> indices;
};

namespace detail {

// Squared NNLS residual at one candidate, summed over channels. Uses the
// pre-rendered Gram matrices; with an atom or row subset the reduced system
// is assembled on the fly.
inline double candidate_residual_sq(const RenderedLevel& lvl, int cand,
                                    const Eigen::MatrixXd& obs,
                                    const ScanOptions& opt,
                                    EstimatorWorkspace& ws) {
  const int q = lvl.q;
  const int m = lvl.m;
  const bool sub_atoms = !opt.atom_subset.empty();
  const bool sub_rows = !opt.rows.empty();
  const int k = sub_atoms ? static_cast<int>(opt.atom_subset.size()) : m;

  if (ws.h.size() < static_cast<std::size_t>(k)) ws.h.resize(static_cast<std::size_t>(k));
  if (sub_atoms || sub_rows) {
    if (ws.gsub.size() < static_cast<std::size_t>(k) * k) {
      ws.gsub.resize(static_cast<std::size_t>(k) * k);
    }
  }

  double total = 0.0;
  for (int ch = 0; ch < lvl.channels; ++ch) {
    const double* block = lvl.block(cand, ch);
    const double* gram = lvl.gram(cand, ch);
    double yty = 0.0;

    if (!sub_rows) {
      Eigen::Map<const Eigen::MatrixXd> B(block, q, m);
      Eigen::Map<const Eigen::VectorXd> y(obs.col(ch).data(), q);
      yty = y.squaredNorm();
      if (!sub_atoms) {
        Eigen::Map<Eigen::VectorXd>(ws.h.data(), m).noalias() =
            B.transpose() * y;
      } else {
        for (int a = 0; a < k; ++a) {
          ws.h[static_cast<std::size_t>(a)] =
              B.col(opt.atom_subset[static_cast<std::size_t>(a)]).dot(y);
        }
        for (int a = 0; a < k; ++a) {
          for (int b = 0; b < k; ++b) {
            ws.gsub[static_cast<std::size_t>(a) * k + b] =
                gram[static_cast<std::size_t>(
                         opt.atom_subset[static_cast<std::size_t>(a)]) *
                         m +
                     opt.atom_subset[static_cast<std::size_t>(b)]];
          }
        }
      }
    } else {
      // Saturated rows removed: rebuild the reduced Gram system directly.
      const int qr = static_cast<int>(opt.rows.size());
      if (ws.bsub.size() < static_cast<std::size_t>(qr) * k) {
        ws.bsub.resize(static_cast<std::size_t>(qr) * k);
      }
      if (ws.ysub.size() < static_cast<std::size_t>(qr)) {
        ws.ysub.resize(static_cast<std::size_t>(qr));
      }
      for (int r = 0; r < qr; ++r) {
        const int row = opt.rows[static_cast<std::size_t>(r)];
        ws.ysub[static_cast<std::size_t>(r)] = obs(row, ch);
        for (int a = 0; a < k; ++a) {
          const int col = sub_atoms ? opt.atom_subset[static_cast<std::size_t>(a)] : a;
          ws.bsub[static_cast<std::size_t>(a) * qr + r] =
              block[static_cast<std::size_t>(col) * q + row];
        }
      }
      Eigen::Map<const Eigen::MatrixXd> B(ws.bsub.data(), qr, k);
      Eigen::Map<const Eigen::VectorXd> y(ws.ysub.data(), qr);
      yty = y.squaredNorm();
      Eigen::Map<Eigen::VectorXd>(ws.h.data(), k).noalias() = B.transpose() * y;
      Eigen::Map<Eigen::MatrixXd>(ws.gsub.data(), k, k).noalias() =
          B.transpose() * B;
    }

    const double* g = (sub_atoms || sub_rows) ? ws.gsub.data() : gram;
    double hmax = 0.0;
    for (int a = 0; a < k; ++a) {
      hmax = std::max(hmax, std::abs(ws.h[static_cast<std::size_t>(a)]));
    }
    nonneg_qp(g, ws.h.data(), k, opt.tol * hmax, std::max(3 * k, 30), ws.qp);
    total += residual_sq_from_gram(g, ws.h.data(), yty, k, ws.qp.x.data());
  }
  return total;
}

// Exact residual and certificate at one candidate, via a direct solve on the
// (possibly reduced) dense system.
inline NnlsSolution exact_solution_at(const RenderedLevel& lvl, int cand,
                                      const Eigen::MatrixXd& obs,
                                      const ScanOptions& opt, int ch,
                                      NnlsWorkspace& qp_ws) {
  const int q = lvl.q;
  const int m = lvl.m;
  const bool sub_atoms = !opt.atom_subset.empty();
  const int k = sub_atoms ? static_cast<int>(opt.atom_subset.size()) : m;
  const int qr = opt.rows.empty() ? q : static_cast<int>(opt.rows.size());

  Eigen::MatrixXd B(qr, k);
  Eigen::VectorXd y(qr);
  const double* block = lvl.block(cand, ch);
  for (int r = 0; r < qr; ++r) {
    const int row = opt.rows.empty() ? r : opt.rows[static_cast<std::size_t>(r)];
    y[r] = obs(row, ch);
    for (int a = 0; a < k; ++a) {
      const int col = sub_atoms ? opt.atom_subset[static_cast<std::size_t>(a)] : a;
      B(r, a) = block[static_cast<std::size_t>(col) * q + row];
    }
  }
  return nnls(B, y, opt.tol, qp_ws);
}

struct ScanResult {
  int winner = -1;
  double residual_sq = std::numeric_limits<double>::infinity();
  long visited = 0;
};

// Scans candidates in ascending index order; ties keep the lower index.
template <typename Indices>
ScanResult scan_level(const RenderedLevel& lvl, const Eigen::MatrixXd& obs,
                      const Indices& indices, const ScanOptions& opt,
                      EstimatorWorkspace& ws) {
  ScanResult res;
  for (int cand : indices) {
    const double r2 = candidate_residual_sq(lvl, cand, obs, opt, ws);
    ++res.visited;
    if (r2 < res.residual_sq) {
      res.residual_sq = r2;
      res.winner = cand;
    }
  }
  return res;
}

struct AllIndices {
  int n;
  struct It {
    int i;
    int operator*() const { return i; }
    It& operator++() { ++i; return *this; }
    bool operator!=(const It& o) const { return i != o.i; }
  };
  It begin() const { return {0}; }
  It end() const { return {n}; }
};

inline void check_obs(const PixelObservation& obs,
                      const RenderedDictionary& rd) {
  if (obs.lights() != rd.rig.size()) {
    throw std::invalid_argument(
        "estimate_normal: observation light count does not match rendering");
  }
  if (obs.channels() != rd.channels) {
    throw std::invalid_argument("estimate_normal: channel count mismatch");
  }
}

}  // namespace detail

/// Exhaustive search over the finest rendered candidate set:
/// argmin over candidates of the NNLS residual. Deterministic; ties go to the
/// lowest candidate index.
inline NormalEstimate estimate_normal_brute(const PixelObservation& obs,
                                            const RenderedDictionary& rd,
                                            const ScanOptions& opt = {},
                                            EstimatorWorkspace* ws = nullptr) {
  detail::check_obs(obs, rd);
  const RenderedLevel& lvl = rd.finest();
  EstimatorWorkspace local;
  EstimatorWorkspace& w = ws ? *ws : local;

  const auto scan = detail::scan_level(
      lvl, obs.intensities, detail::AllIndices{lvl.candidates.size()}, opt, w);

  NormalEstimate est;
  est.normal = lvl.candidates.normals[static_cast<std::size_t>(scan.winner)];
  est.candidate_index = scan.winner;
  est.visited = scan.visited;
  double r2 = 0.0;
  bool certified = true;
  for (int ch = 0; ch < rd.channels; ++ch) {
    const auto sol =
        detail::exact_solution_at(lvl, scan.winner, obs.intensities, opt, ch, w.qp);
    r2 += sol.residual_norm * sol.residual_norm;
    certified = certified && sol.certified;
  }
  est.residual = std::sqrt(r2);
  est.certified = certified;
  return est;
}

/// Coarse-to-fine search: a full scan of the coarsest level, then each finer
/// level restricted to the cone of the previous level's spacing around the
/// previous winner. Requires the rendered dictionary to cover every schedule
/// resolution.
inline NormalEstimate estimate_normal_c2f(const PixelObservation& obs,
                                          const RenderedDictionary& rd,
                                          const Schedule& schedule,
                                          const ScanOptions& opt = {},
                                          EstimatorWorkspace* ws = nullptr) {
  detail::check_obs(obs, rd);
  schedule.validate();
  EstimatorWorkspace local;
  EstimatorWorkspace& w = ws ? *ws : local;

  NormalEstimate est;
  const RenderedLevel* lvl =
      &rd.level_for_resolution(schedule.resolutions.front());
  auto scan = detail::scan_level(*lvl, obs.intensities,
                                 detail::AllIndices{lvl->candidates.size()},
                                 opt, w);
  est.visited = scan.visited;
  est.schedule_trace.push_back(
      lvl->candidates.normals[static_cast<std::size_t>(scan.winner)]);

  for (std::size_t level = 1; level < schedule.resolutions.size(); ++level) {
    const Vec3 center = est.schedule_trace.back();
    const double cone_deg = schedule.resolutions[level - 1];
    const double min_dot = std::cos(deg2rad(cone_deg));
    lvl = &rd.level_for_resolution(schedule.resolutions[level]);

    w.indices.clear();
    for (int i = 0; i < lvl->candidates.size(); ++i) {
      if (lvl->candidates.normals[static_cast<std::size_t>(i)].dot(center) >=
          min_dot) {
        w.indices.push_back(i);
      }
    }
    if (w.indices.empty()) {
      // Excluded by the covering property of equi-angular sets.
      throw std::logic_error("estimate_normal_c2f: empty refinement set");
    }
    scan = detail::scan_level(*lvl, obs.intensities, w.indices, opt, w);
    est.visited += scan.visited;
    est.schedule_trace.push_back(
        lvl->candidates.normals[static_cast<std::size_t>(scan.winner)]);
  }

  est.normal = est.schedule_trace.back();
  est.candidate_index = scan.winner;
  double r2 = 0.0;
  bool certified = true;
  for (int ch = 0; ch < rd.channels; ++ch) {
    const auto sol = detail::exact_solution_at(*lvl, scan.winner,
                                               obs.intensities, opt, ch, w.qp);
    r2 += sol.residual_norm * sol.residual_norm;
    certified = certified && sol.certified;
  }
  est.residual = std::sqrt(r2);
  est.certified = certified;
  return est;
}

/// Classic linear photometric stereo under the Lambertian model: least squares
/// on I_i = l_i . b over unshadowed measurements, normal = b/||b||. Channels
/// are averaged before solving.
inline NormalEstimate estimate_normal_lambertian(const PixelObservation& obs,
                                                 const LightingRig& rig,
                                                 double shadow_threshold = 0.0) {
  rig.validate();
  if (obs.lights() != rig.size()) {
    throw std::invalid_argument("estimate_normal_lambertian: light mismatch");
  }
  const Eigen::VectorXd mean = obs.intensities.rowwise().mean();
  std::vector<int> rows;
  for (int i = 0; i < mean.size(); ++i) {
    if (mean[i] > shadow_threshold) rows.push_back(i);
  }
  if (rows.size() < 3) {
    throw std::invalid_argument(
        "estimate_normal_lambertian: needs >= 3 unshadowed measurements");
  }
  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = static_cast<std::size_t>(rows[r]);
    A.row(static_cast<Eigen::Index>(r)) =
        rig.intensities[i] * rig.directions[i].transpose();
    y[static_cast<Eigen::Index>(r)] = mean[rows[r]];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) {
    throw std::invalid_argument(
        "estimate_normal_lambertian: rank-deficient lighting");
  }
  const Eigen::Vector3d b = qr.solve(y);
  NormalEstimate est;
  const double norm = b.norm();
  if (!(norm > 0.0)) {
    throw std::invalid_argument("estimate_normal_lambertian: zero solution");
  }
  est.normal = b / norm;
  est.residual = (y - A * b).norm();
  est.visited = 0;
  return est;
}

struct EstimateImageParams {
  Schedule schedule = Schedule::default_schedule();
  double min_intensity = 0.0;  // pixels whose peak intensity is below: masked out
  double saturation_level = std::numeric_limits<double>::infinity();
  double tol = 1e-9;
  unsigned threads = 0;
};

struct NormalFieldResult {
  NormalField field;
  std::vector<double> residuals;
  std::vector<long> visited;
  std::vector<std::uint8_t> certified;
  std::size_t estimated_pixels = 0;
  std::size_t uncertified_pixels = 0;
};

/// Runs the coarse-to-fine estimator independently on every masked-in pixel of
/// an image stack. Output is identical for any thread count.
inline NormalFieldResult estimate_image(
    const std::vector<Image>& stack, const RenderedDictionary& rd,
    const EstimateImageParams& params,
    const std::vector<std::uint8_t>* foreground_mask = nullptr) {
  if (stack.empty()) {
    throw std::invalid_argument("estimate_image: empty stack");
  }
  if (static_cast<int>(stack.size()) != rd.rig.size()) {
    throw std::invalid_argument(
        "estimate_image: stack size does not match lighting rig");
  }
  const int w = stack.front().width;
  const int h = stack.front().height;
  const int channels = stack.front().channels;
  for (const auto& img : stack) {
    if (img.width != w || img.height != h || img.channels != channels) {
      throw std::invalid_argument("estimate_image: inconsistent stack");
    }
  }
  if (channels != rd.channels) {
    throw std::invalid_argument("estimate_image: channel mismatch");
  }
  const std::size_t npix = static_cast<std::size_t>(w) * h;
  if (foreground_mask && foreground_mask->size() != npix) {
    throw std::invalid_argument("estimate_image: mask size mismatch");
  }

  NormalFieldResult out;
  out.field = NormalField(w, h);
  out.residuals.assign(npix, 0.0);
  out.visited.assign(npix, 0);
  out.certified.assign(npix, 0);

  const int q = static_cast<int>(stack.size());
  parallel_for(npix, params.threads, [&](std::size_t p) {
    if (foreground_mask && !(*foreground_mask)[p]) return;
    const int x = static_cast<int>(p) % w;
    const int y = static_cast<int>(p) / w;

    PixelObservation obs;
    obs.x = x;
    obs.y = y;
    obs.intensities.resize(q, channels);
    double peak = 0.0;
    for (int i = 0; i < q; ++i) {
      for (int ch = 0; ch < channels; ++ch) {
        const double v = stack[static_cast<std::size_t>(i)].at(x, y, ch);
        obs.intensities(i, ch) = v;
        peak = std::max(peak, v);
      }
    }
    if (peak < params.min_intensity) return;

    ScanOptions opt;
    opt.tol = params.tol;
    std::vector<int> usable_rows;
    if (std::isfinite(params.saturation_level)) {
      for (int i = 0; i < q; ++i) {
        bool saturated = false;
        for (int ch = 0; ch < channels; ++ch) {
          if (obs.intensities(i, ch) >= params.saturation_level) {
            saturated = true;
            break;
          }
        }
        if (!saturated) usable_rows.push_back(i);
      }
      if (usable_rows.empty()) return;
      opt.rows = usable_rows;
    }

    thread_local EstimatorWorkspace ws;
    const auto est = estimate_normal_c2f(obs, rd, params.schedule, opt, &ws);
    out.field.normals[p] = est.normal;
    out.field.mask[p] = 1;
    out.residuals[p] = est.residual;
    out.visited[p] = est.visited;
    out.certified[p] = est.certified ? 1 : 0;
  });

  for (std::size_t p = 0; p < npix; ++p) {
    if (out.field.mask[p]) {
      ++out.estimated_pixels;
      if (!out.certified[p]) ++out.uncertified_pixels;
    }
  }
  return out;
}

}  // namespace dictps
