// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/hierarchy.hpp"

#include <doctest.h>

#include <algorithm>

using namespace ultrametric;

namespace {

// Smallest r for which x and y fall in the same consecutive block of length
// 2^r, found by scanning the partitions.
int distance_by_scan(std::uint64_t x, std::uint64_t y) {
  for (int r = 0;; ++r) {
    const std::uint64_t len = std::uint64_t{1} << r;
    if ((x - 1) / len == (y - 1) / len) return r;
  }
}

}  // namespace

TEST_CASE("ultrametric distance matches partition scan") {
  const int n = 6;
  for (std::uint64_t x = 1; x <= volume(n); ++x)
    for (std::uint64_t y = 1; y <= volume(n); ++y)
      CHECK(ultrametric_distance(SiteIndex(x), SiteIndex(y)).value() == distance_by_scan(x, y));
  CHECK(ultrametric_distance(SiteIndex(1), SiteIndex(2)).value() == 1);
  CHECK(ultrametric_distance(SiteIndex(2), SiteIndex(3)).value() == 2);
  CHECK(ultrametric_distance(SiteIndex(4), SiteIndex(5)).value() == 3);
}

TEST_CASE("strong triangle inequality") {
  const int n = 4;
  for (std::uint64_t x = 1; x <= volume(n); ++x)
    for (std::uint64_t y = 1; y <= volume(n); ++y)
      for (std::uint64_t z = 1; z <= volume(n); ++z) {
        const int dxz = ultrametric_distance(SiteIndex(x), SiteIndex(z)).value();
        const int dxy = ultrametric_distance(SiteIndex(x), SiteIndex(y)).value();
        const int dyz = ultrametric_distance(SiteIndex(y), SiteIndex(z)).value();
        CHECK(dxz <= std::max(dxy, dyz));
      }
}

TEST_CASE("block ranges partition the lattice") {
  const int n = 5;
  for (int r = 0; r <= n; ++r) {
    for (std::uint64_t x = 1; x <= volume(n); ++x) {
      const BlockRange b = block_range(Level(r), SiteIndex(x));
      CHECK(b.size() == (std::uint64_t{1} << r));
      CHECK(b.contains(SiteIndex(x)));
      CHECK((b.lo.label() - 1) % b.size() == 0);
      for (std::uint64_t y = 1; y <= volume(n); ++y)
        CHECK(b.contains(SiteIndex(y)) == (ultrametric_distance(SiteIndex(x), SiteIndex(y)).value() <= r));
    }
  }
  CHECK(block_range(Level(2), SiteIndex(6)).lo.label() == 5);
  CHECK(block_range(Level(2), SiteIndex(6)).hi.label() == 8);
}

TEST_CASE("layer variance profile") {
  CHECK(layer_variance(SiteIndex(3), SiteIndex(3), Level(0)) == 2.0);
  CHECK(layer_variance(SiteIndex(3), SiteIndex(3), Level(2)) == 0.5);
  CHECK(layer_variance(SiteIndex(3), SiteIndex(4), Level(2)) == 0.25);
  CHECK(layer_variance(SiteIndex(3), SiteIndex(5), Level(2)) == 0.0);
  CHECK(layer_variance(SiteIndex(3), SiteIndex(5), Level(3)) == 0.125);
  CHECK(SiteIndex::from_offset(0).label() == 1);
  CHECK(volume(12) == 4096);
}
