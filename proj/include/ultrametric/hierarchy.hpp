// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dyadic hierarchy on B_n = {1, ..., 2^n}: the partitions P_r into consecutive
// blocks of length 2^r, the induced ultrametric, and the per-layer variance
// profile. Site labels are 1-based at this API; arrays elsewhere are 0-based
// and use SiteIndex::offset().

#pragma once

#include <cstddef>
#include <cstdint>

namespace ultrametric {

class SiteIndex {
 public:
  constexpr explicit SiteIndex(std::uint64_t label) : label_(label) {}
  static constexpr SiteIndex from_offset(std::size_t offset) { return SiteIndex(offset + 1); }

  [[nodiscard]] constexpr std::uint64_t label() const { return label_; }
  [[nodiscard]] constexpr std::size_t offset() const { return static_cast<std::size_t>(label_ - 1); }

  friend constexpr bool operator==(SiteIndex, SiteIndex) = default;

 private:
  std::uint64_t label_;
};

class Level {
 public:
  constexpr explicit Level(int r) : r_(r) {}
  [[nodiscard]] constexpr int value() const { return r_; }
  friend constexpr auto operator<=>(Level, Level) = default;

 private:
  int r_;
};

struct BlockRange {
  SiteIndex lo;
  SiteIndex hi;
  [[nodiscard]] bool contains(SiteIndex y) const { return lo.label() <= y.label() && y.label() <= hi.label(); }
  [[nodiscard]] std::uint64_t size() const { return hi.label() - lo.label() + 1; }
};

// Smallest r such that x and y share a member of P_r. Computed as the bit
// width of (x-1) xor (y-1).
Level ultrametric_distance(SiteIndex x, SiteIndex y);

// The member of P_r containing x.
BlockRange block_range(Level r, SiteIndex x);

// Entry variance of the layer matrix Phi_r:
//   2 * 2^-r  if d(x,y) = 0,   2^-r  if 1 <= d(x,y) <= r,   0 otherwise.
double layer_variance(SiteIndex x, SiteIndex y, Level r);

// N_n = 2^n.
constexpr std::size_t volume(int n) { return std::size_t{1} << n; }

}  // namespace ultrametric
