// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dictps/brdf.hpp"
#include "dictps/hash.hpp"
#include "dictps/image.hpp"
#include "dictps/lighting.hpp"
#include "dictps/parallel.hpp"
#include "dictps/sampling.hpp"
#include "dictps/types.hpp"

namespace dictps {

/// Image-formation model for one configuration: interpolated reflectance times
/// the attached-shadow term max{0, n.l}. Exactly zero for back-lit normals and
/// for normals facing away from the viewer; the sampling functional is never
/// evaluated in either case.
inline double shade(const Brdf& brdf, const Vec3& normal, const Vec3& light,
                    const Vec3& view, int ch) {
  const double nl = normal.dot(light);
  if (nl <= 0.0) return 0.0;
  if (normal.dot(view) <= 0.0) return 0.0;
  return brdf.evaluate(light, view, normal, ch) * nl;
}

/// One per-candidate slab of virtual-example matrices B(n) in R^{QxM}
/// (column-major, one per channel), plus their Gram matrices for the
/// active-set solver's hot path.
struct RenderedLevel {
  CandidateSet candidates;
  int q = 0;
  int m = 0;
  int channels = 0;
  std::vector<double> blocks;  // [candidate][channel] Q*M column-major
  std::vector<double> grams;   // [candidate][channel] M*M column-major

  const double* block(int cand, int ch) const {
    return blocks.data() +
           (static_cast<std::size_t>(cand) * channels + ch) *
               (static_cast<std::size_t>(q) * m);
  }
  const double* gram(int cand, int ch) const {
    return grams.data() + (static_cast<std::size_t>(cand) * channels + ch) *
                              (static_cast<std::size_t>(m) * m);
  }
  Eigen::Map<const Eigen::MatrixXd> matrix(int cand, int ch) const {
    return {block(cand, ch), q, m};
  }
};

/// Pre-rendered dictionary over one or more candidate resolutions, shared
/// read-only by the per-pixel estimators.
struct RenderedDictionary {
  LightingRig rig;
  Vec3 view = Vec3::UnitZ();
  int m = 0;
  int channels = 0;
  std::uint64_t dict_hash = 0;
  std::vector<std::string> atom_names;
  std::vector<RenderedLevel> levels;  // coarse to fine

  const RenderedLevel& level_for_resolution(double res_deg) const {
    for (const auto& lvl : levels) {
      if (lvl.candidates.resolution_deg == res_deg) return lvl;
    }
    throw std::invalid_argument("RenderedDictionary: no level at resolution " +
                                std::to_string(res_deg));
  }
  const RenderedLevel& finest() const {
    if (levels.empty()) throw std::logic_error("RenderedDictionary: empty");
    return levels.back();
  }
};

inline std::uint64_t dictionary_content_hash(const Dictionary& dict) {
  Hasher h;
  h.pod(dict.size()).pod(dict.channels());
  for (int j = 0; j < dict.size(); ++j) {
    h.str(dict.atom(j).name());
    for (int ch = 0; ch < dict.channels(); ++ch) {
      h.span(dict.atom(j).channel(ch));
    }
  }
  return h.value();
}

namespace detail {

// Fills `out` (channels blocks of Q x M, column-major) with the virtual
// intensities of every atom at one normal. One sampling functional per light,
// shared across atoms and channels.
inline void render_matrix_at(const Dictionary& dict, const Vec3& normal,
                             const LightingRig& rig, const Vec3& view,
                             double* out) {
  const int q = rig.size();
  const int m = dict.size();
  const int channels = dict.channels();
  const std::size_t block = static_cast<std::size_t>(q) * m;
  std::fill(out, out + block * channels, 0.0);
  const double nv = normal.dot(view);
  if (nv <= 0.0) return;  // invisible candidate: all rows zero
  for (int i = 0; i < q; ++i) {
    const Vec3& l = rig.directions[static_cast<std::size_t>(i)];
    const double nl = normal.dot(l);
    if (nl <= 0.0) continue;  // attached shadow row
    const double weight = nl * rig.intensities[static_cast<std::size_t>(i)];
    const auto s = sampling_functional(l, view, normal);
    for (int ch = 0; ch < channels; ++ch) {
      double* b = out + static_cast<std::size_t>(ch) * block;
      for (int j = 0; j < m; ++j) {
        b[static_cast<std::size_t>(j) * q + i] =
            s.apply(dict.atom(j).channel(ch)) * weight;
      }
    }
  }
}

}  // namespace detail

/// Q x M virtual-example matrices (one per channel) for a single normal.
inline std::vector<Eigen::MatrixXd> render_pixel_matrices(
    const Dictionary& dict, const Vec3& normal, const LightingRig& rig,
    const Vec3& view) {
  const int q = rig.size();
  const int m = dict.size();
  std::vector<double> buf(static_cast<std::size_t>(q) * m * dict.channels());
  detail::render_matrix_at(dict, normal, rig, view, buf.data());
  std::vector<Eigen::MatrixXd> out;
  out.reserve(static_cast<std::size_t>(dict.channels()));
  for (int ch = 0; ch < dict.channels(); ++ch) {
    out.emplace_back(Eigen::Map<const Eigen::MatrixXd>(
        buf.data() + static_cast<std::size_t>(ch) * q * m, q, m));
  }
  return out;
}

/// Materializes B(n) for every candidate of every given set. Deterministic and
/// bit-identical for any thread count.
inline RenderedDictionary render_dictionary(
    const Dictionary& dict, const std::vector<CandidateSet>& level_sets,
    const LightingRig& rig, const Vec3& view, unsigned threads = 0) {
  rig.validate();
  require_unit(view, "view");
  if (level_sets.empty()) {
    throw std::invalid_argument("render_dictionary: no candidate sets");
  }
  RenderedDictionary rd;
  rd.rig = rig;
  rd.view = view;
  rd.m = dict.size();
  rd.channels = dict.channels();
  rd.dict_hash = dictionary_content_hash(dict);
  for (int j = 0; j < dict.size(); ++j) {
    rd.atom_names.push_back(dict.atom(j).name());
  }

  const int q = rig.size();
  const int m = dict.size();
  const std::size_t block = static_cast<std::size_t>(q) * m;
  for (const auto& set : level_sets) {
    if (set.size() == 0) {
      throw std::invalid_argument("render_dictionary: empty candidate set");
    }
    RenderedLevel lvl;
    lvl.candidates = set;
    lvl.q = q;
    lvl.m = m;
    lvl.channels = dict.channels();
    lvl.blocks.resize(block * static_cast<std::size_t>(dict.channels()) *
                      static_cast<std::size_t>(set.size()));
    lvl.grams.resize(static_cast<std::size_t>(m) * m * dict.channels() *
                     static_cast<std::size_t>(set.size()));
    parallel_for(static_cast<std::size_t>(set.size()), threads,
                 [&](std::size_t cand) {
                   double* out =
                       lvl.blocks.data() +
                       cand * block * static_cast<std::size_t>(dict.channels());
                   detail::render_matrix_at(
                       dict, set.normals[cand], rig, view, out);
                   for (int ch = 0; ch < dict.channels(); ++ch) {
                     Eigen::Map<const Eigen::MatrixXd> B(
                         out + static_cast<std::size_t>(ch) * block, q, m);
                     Eigen::Map<Eigen::MatrixXd> G(
                         lvl.grams.data() +
                             (cand * static_cast<std::size_t>(dict.channels()) +
                              static_cast<std::size_t>(ch)) *
                                 (static_cast<std::size_t>(m) * m),
                         m, m);
                     G.noalias() = B.transpose() * B;
                   }
                 });
    rd.levels.push_back(std::move(lvl));
  }
  return rd;
}

inline RenderedDictionary render_dictionary(const Dictionary& dict,
                                            const CandidateSet& candidates,
                                            const LightingRig& rig,
                                            const Vec3& view,
                                            unsigned threads = 0) {
  return render_dictionary(dict, std::vector<CandidateSet>{candidates}, rig,
                           view, threads);
}

/// Renders the synthetic appearance of a normal/abundance field under a rig:
/// I_p = B(n_p) c_p per channel. Optional additive Gaussian noise with sigma
/// relative to the mean unmasked intensity, clamped at zero; the noise pass is
/// sequential so results are independent of thread count.
inline std::vector<Image> render_scene(const NormalField& shape,
                                       const AbundanceField& abundances,
                                       const Dictionary& dict,
                                       const LightingRig& rig, const Vec3& view,
                                       double noise_sigma_rel = 0.0,
                                       std::uint64_t seed = 0,
                                       unsigned threads = 0) {
  rig.validate();
  if (shape.width != abundances.width || shape.height != abundances.height) {
    throw std::invalid_argument("render_scene: shape/abundance size mismatch");
  }
  if (abundances.atoms != dict.size() ||
      abundances.channels != dict.channels()) {
    throw std::invalid_argument(
        "render_scene: abundance map does not match dictionary");
  }
  for (double c : abundances.coefficients) {
    if (c < 0.0) {
      throw std::invalid_argument("render_scene: abundances must be >= 0");
    }
  }
  const int q = rig.size();
  const int channels = dict.channels();
  std::vector<Image> stack(static_cast<std::size_t>(q),
                           Image(shape.width, shape.height, channels));

  parallel_for(shape.normals.size(), threads, [&](std::size_t p) {
    if (!shape.mask[p]) return;
    const int x = static_cast<int>(p) % shape.width;
    const int y = static_cast<int>(p) / shape.width;
    const auto mats =
        render_pixel_matrices(dict, shape.normals[p], rig, view);
    for (int ch = 0; ch < channels; ++ch) {
      Eigen::Map<const Eigen::VectorXd> c(abundances.coeffs_at(x, y, ch),
                                          dict.size());
      const Eigen::VectorXd intensities = mats[static_cast<std::size_t>(ch)] * c;
      for (int i = 0; i < q; ++i) {
        stack[static_cast<std::size_t>(i)].at(x, y, ch) =
            static_cast<float>(intensities[i]);
      }
    }
  });

  if (noise_sigma_rel > 0.0) {
    double mean = 0.0;
    std::size_t count = 0;
    for (const auto& img : stack) {
      for (std::size_t p = 0; p < shape.normals.size(); ++p) {
        if (!shape.mask[p]) continue;
        for (int ch = 0; ch < channels; ++ch) {
          mean += img.data[p * static_cast<std::size_t>(channels) +
                           static_cast<std::size_t>(ch)];
        }
        count += static_cast<std::size_t>(channels);
      }
    }
    if (count > 0) mean /= static_cast<double>(count);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_sigma_rel * mean);
    for (auto& img : stack) {
      for (std::size_t p = 0; p < shape.normals.size(); ++p) {
        if (!shape.mask[p]) continue;
        for (int ch = 0; ch < channels; ++ch) {
          auto& v = img.data[p * static_cast<std::size_t>(channels) +
                             static_cast<std::size_t>(ch)];
          v = std::max(0.0f, static_cast<float>(v + noise(rng)));
        }
      }
    }
  }
  return stack;
}

/// Re-renders a reconstruction (normals + abundances) under new lighting.
inline std::vector<Image> relight(const NormalField& shape,
                                  const AbundanceField& abundances,
                                  const Dictionary& dict,
                                  const LightingRig& new_rig, const Vec3& view,
                                  unsigned threads = 0) {
  return render_scene(shape, abundances, dict, new_rig, view, 0.0, 0, threads);
}

}  // namespace dictps
