// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/hierarchy.hpp"

#include <bit>
#include <cmath>

namespace ultrametric {

Level ultrametric_distance(SiteIndex x, SiteIndex y) {
  const std::uint64_t diff = (x.label() - 1) ^ (y.label() - 1);
  return Level(static_cast<int>(std::bit_width(diff)));
}

BlockRange block_range(Level r, SiteIndex x) {
  const std::uint64_t size = std::uint64_t{1} << r.value();
  const std::uint64_t block = (x.label() - 1) >> r.value();  // ceil(x / 2^r) - 1
  return {SiteIndex(block * size + 1), SiteIndex((block + 1) * size)};
}

double layer_variance(SiteIndex x, SiteIndex y, Level r) {
  const int d = ultrametric_distance(x, y).value();
  const double scale = std::ldexp(1.0, -r.value());
  if (d == 0) return 2.0 * scale;
  if (d <= r.value()) return scale;
  return 0.0;
}

}  // namespace ultrametric
