// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "dictps/brdf.hpp"

namespace dictps {

static_assert(std::endian::native == std::endian::little,
              "MERL I/O assumes a little-endian host");

/// Per-channel scale constants of the MERL binary format. Files store
/// reflectance divided by these; the reader multiplies them back.
inline constexpr double kMerlScale[3] = {1.0 / 1500.0, 1.15 / 1500.0,
                                         1.66 / 1500.0};

struct MerlReadResult {
  Brdf brdf;
  std::int64_t clamped_negatives = 0;  // -1 markers and other negative cells
};

/// Reads a MERL-convention binary BRDF: header ints (90, 90, 180), then
/// 3 x 1,458,000 little-endian doubles, channel-major R/G/B. Negative file
/// entries are clamped to zero and counted.
inline MerlReadResult read_merl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("read_merl: cannot open " + path.string());
  }
  std::int32_t dims[3] = {0, 0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in) throw std::runtime_error("read_merl: truncated header");
  if (dims[0] != BrdfGrid::kThetaH || dims[1] != BrdfGrid::kThetaD ||
      dims[2] != BrdfGrid::kPhiD) {
    throw std::runtime_error("read_merl: unexpected dimensions (" +
                             std::to_string(dims[0]) + ", " +
                             std::to_string(dims[1]) + ", " +
                             std::to_string(dims[2]) + ")");
  }

  MerlReadResult result;
  result.brdf = Brdf(3, path.stem().string());
  for (int ch = 0; ch < 3; ++ch) {
    auto table = result.brdf.channel(ch);
    std::vector<double> raw(BrdfGrid::kSamples);
    in.read(reinterpret_cast<char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_merl: truncated data block");
    const double scale = kMerlScale[ch];
    for (int i = 0; i < BrdfGrid::kSamples; ++i) {
      const double v = raw[static_cast<std::size_t>(i)] * scale;
      if (v < 0.0 || std::isnan(v)) {
        table[static_cast<std::size_t>(i)] = 0.0;
        ++result.clamped_negatives;
      } else {
        table[static_cast<std::size_t>(i)] = v;
      }
    }
  }
  return result;
}

namespace detail {

// File-unit value whose rescaled read-back reproduces `physical` exactly,
// when such a preimage exists under round-to-nearest.
inline double merl_raw_for(double physical, double scale) {
  const double raw = physical / scale;
  if (raw * scale == physical) return raw;
  double lo = raw, hi = raw;
  for (int step = 0; step < 2; ++step) {
    lo = std::nextafter(lo, -std::numeric_limits<double>::infinity());
    hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
    if (lo * scale == physical) return lo;
    if (hi * scale == physical) return hi;
  }
  return raw;
}

}  // namespace detail

/// Writes a 3-channel Brdf in MERL binary convention. Values round-trip
/// through read_merl bit-exactly.
inline void write_merl(const Brdf& brdf, const std::filesystem::path& path) {
  if (brdf.channels() != 3) {
    throw std::invalid_argument("write_merl: requires a 3-channel Brdf");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("write_merl: cannot open " + path.string());
  }
  const std::int32_t dims[3] = {BrdfGrid::kThetaH, BrdfGrid::kThetaD,
                                BrdfGrid::kPhiD};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<double> raw(BrdfGrid::kSamples);
  for (int ch = 0; ch < 3; ++ch) {
    auto table = brdf.channel(ch);
    const double scale = kMerlScale[ch];
    for (int i = 0; i < BrdfGrid::kSamples; ++i) {
      raw[static_cast<std::size_t>(i)] =
          detail::merl_raw_for(table[static_cast<std::size_t>(i)], scale);
    }
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("write_merl: write failed");
}

}  // namespace dictps
