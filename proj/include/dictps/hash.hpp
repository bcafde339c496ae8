// Copyright 2026 The dictps Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace dictps {

/// Incremental FNV-1a 64-bit hash used for content addressing of caches and
/// output artifacts.
class Hasher {
 public:
  Hasher& bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= b[i];
      state_ *= 0x100000001b3ull;
    }
    return *this;
  }

  template <typename T>
  Hasher& pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    return bytes(&v, sizeof(T));
  }

  Hasher& str(const std::string& s) {
    pod(s.size());
    return bytes(s.data(), s.size());
  }

  template <typename T>
  Hasher& span(std::span<const T> s) {
    static_assert(std::is_trivially_copyable_v<T>);
    pod(s.size());
    return bytes(s.data(), s.size_bytes());
  }

  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::uint64_t hash_bytes(const void* p, std::size_t n) {
  return Hasher().bytes(p, n).value();
}

}  // namespace dictps
