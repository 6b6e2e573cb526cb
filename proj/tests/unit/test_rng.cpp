// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace ultrametric;

TEST_CASE("philox4x32-10 known answers") {
  using C = std::array<std::uint32_t, 4>;
  using K = std::array<std::uint32_t, 2>;
  CHECK(philox4x32_10(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
        C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
        C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and substreams differ") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  const RandomStream root(42);
  std::set<std::uint64_t> keys;
  for (std::uint64_t t = 0; t < 1000; ++t) keys.insert(root.substream(t).key());
  CHECK(keys.size() == 1000);
  CHECK(root.substream(1, 2).key() == root.substream(1).substream(2).key());
  CHECK(root.substream(1, 2).key() != root.substream(2, 1).key());
}

TEST_CASE("uniform and normal moments") {
  RandomStream s(7);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0, sn4 = 0.0;
  double umin = 1.0, umax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    su += u;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
    sn4 += z * z * z * z;
  }
  CHECK(umin > 0.0);
  CHECK(umax < 1.0);
  CHECK(std::abs(su / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sn / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sn4 / n - 3.0) < 5.0 * std::sqrt(96.0 / n));
}
