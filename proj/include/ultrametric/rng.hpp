// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Counter-based, splittable random streams.
//
// Bits come from Philox4x32-10 (Salmon et al., SC'11) keyed by a 64-bit stream
// key; the 128-bit counter holds the block index. A substream is a fresh key
//
//     key' = splitmix64(key ^ splitmix64(tag + 0x9E3779B97F4A7C15))
//
// so any (realization, layer, block, row) address maps to an independent
// stream without touching shared state.
//
// Uniform doubles use the top 53 bits of a 64-bit draw, shifted by half an ulp
// into the open interval (0, 1). Normals use the Box-Muller transform on two
// consecutive uniforms u1, u2:
//
//     z0 = sqrt(-2 ln u1) cos(2 pi u2),  z1 = sqrt(-2 ln u1) sin(2 pi u2)
//
// returned in that order (z1 is cached for the next call).

#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace ultrametric {

std::uint64_t splitmix64(std::uint64_t x);

// One Philox4x32-10 block.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key = 0) : key_(key) {}

  [[nodiscard]] RandomStream substream(std::uint64_t tag) const;

  // Convenience for nested addresses, e.g. substream({cell, layer, block}).
  template <typename... Tags>
  [[nodiscard]] RandomStream substream(std::uint64_t first, Tags... rest) const {
    RandomStream s = substream(first);
    ((s = s.substream(static_cast<std::uint64_t>(rest))), ...);
    return s;
  }

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform();
  double normal();

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int position_ = 4;
  std::optional<double> cached_normal_;
};

}  // namespace ultrametric
