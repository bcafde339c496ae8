// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dictps/brdf.hpp"

namespace dictps {

namespace detail {

/// max(0, cos(incident elevation)) per grid cell, from each cell's canonical
/// direction pair. Built once, shared read-only.
inline const std::vector<double>& incident_cosine_table() {
  static const std::vector<double> table = [] {
    std::vector<double> w(static_cast<std::size_t>(BrdfGrid::kSamples));
    for (int ih = 0; ih < BrdfGrid::kThetaH; ++ih) {
      for (int id = 0; id < BrdfGrid::kThetaD; ++id) {
        for (int ip = 0; ip < BrdfGrid::kPhiD; ++ip) {
          const HalfAngleCoords c{BrdfGrid::theta_h_node(ih),
                                  BrdfGrid::theta_d_node(id),
                                  BrdfGrid::phi_d_node(ip)};
          w[static_cast<std::size_t>(BrdfGrid::index(ih, id, ip))] =
              std::max(0.0, incident_cosine(c));
        }
      }
    }
    return w;
  }();
  return table;
}

}  // namespace detail

/// Cosine-weighted RMS difference between two BRDF tables, averaged over
/// channels. Zero iff the tables agree on every cell visible from above.
inline double relative_brdf_error(const Brdf& estimate, const Brdf& truth) {
  if (!estimate.same_shape(truth)) {
    throw std::invalid_argument("relative_brdf_error: shape mismatch");
  }
  const auto& cosines = detail::incident_cosine_table();
  double total = 0.0;
  for (int ch = 0; ch < estimate.channels(); ++ch) {
    auto a = estimate.channel(ch);
    auto b = truth.channel(ch);
    double sum = 0.0;
    for (int i = 0; i < BrdfGrid::kSamples; ++i) {
      const double d =
          (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) *
          cosines[static_cast<std::size_t>(i)];
      sum += d * d;
    }
    total += std::sqrt(sum / BrdfGrid::kSamples);
  }
  return total / estimate.channels();
}

}  // namespace dictps
