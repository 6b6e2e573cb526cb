// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Sampling the ultrametric ensemble H_n = sum_{r=0}^n sqrt(t_r) Phi_{n,r},
// t_r = 2^{-(1+eps) r}, either layer by layer or through the recursion
// H_k = H_{k-1} (+) H'_{k-1} + Phi_{N_k}(t_k), plus matrix Brownian paths.
//
// Random addresses: layer r of realization stream S draws block k, local row i
// from S.substream(r, k, i); row i fills entries (i, j <= i) in order of j.

#pragma once

#include "ultrametric/hierarchy.hpp"
#include "ultrametric/matrix.hpp"
#include "ultrametric/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ultrametric {

enum class Normalization { raw, mean_field };

std::string to_string(Normalization n);
Normalization parse_normalization(const std::string& s);

inline constexpr int kDefaultMaxLevel = 14;

struct EnsembleParams {
  double epsilon = -0.75;
  int n = 8;
  Normalization normalization = Normalization::raw;
  std::uint64_t seed = 0;

  // Throws PreconditionError on n outside [0, max_level] or epsilon <= -1 in
  // raw mode.
  void validate(int max_level = kDefaultMaxLevel) const;
  [[nodiscard]] std::size_t dim() const { return volume(n); }
};

// t_r = 2^{-(1+eps) r}.
double coupling_weight(Level r, double epsilon);

// Z_n^2: total entry variance of one row of the raw ensemble,
// sum_r t_r (1 + 2^{-r}). Independent of the row.
double normalization_squared(int n, double epsilon);

// E|<delta_y, H_n delta_x>|^2 for the raw ensemble.
double entry_variance(SiteIndex x, SiteIndex y, int n, double epsilon);

enum class Execution { serial, parallel };

namespace kernels {
// Adds independent GOE blocks of size `block` along the diagonal of `m`:
// off-diagonal entries N(0, sd^2), diagonal N(0, 2 sd^2). Block k, row i
// draws from stream.substream(k, i). The parallel variant splits rows across
// OpenMP threads and produces bit-identical output.
namespace serial {
void add_goe_blocks(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream);
}
namespace parallel {
void add_goe_blocks(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream);
}
}  // namespace kernels

// Phi_{n,r}: 2^{n-r} independent GOE blocks of size 2^r with entry variance
// (1 + delta_xy) 2^{-r}.
SymmetricMatrix sample_layer(Level n, Level r, const RandomStream& stream);

// sum over r in [r_begin, r_end) of sqrt(t_r) Phi_{n,r}, raw normalization.
// Layer r uses stream.substream(r), so partial sums compose exactly:
// sample_layers(p, s, 0, n) + sample_layers(p, s, n, n+1) equals
// sample_direct(p, s) for raw params, bit for bit.
SymmetricMatrix sample_layers(const EnsembleParams& params, const RandomStream& stream, int r_begin,
                              int r_end, Execution exec = Execution::parallel);

// H_n by direct layer summation; divided by Z_n in mean_field mode.
SymmetricMatrix sample_direct(const EnsembleParams& params, const RandomStream& stream,
                              Execution exec = Execution::parallel);

// H_n through the block recursion. Raw normalization only.
SymmetricMatrix sample_recursive(const EnsembleParams& params, const RandomStream& stream);

// Phi_dim(1): GOE with entry variance (1 + delta_xy)/dim.
SymmetricMatrix sample_goe(std::size_t dim, const RandomStream& stream);

// Matrix Brownian path Phi_dim(t) on a time grid. Increments are generated on
// demand from the counter-based stream, so a path never holds more than one
// dim x dim matrix.
class DbmPath {
 public:
  DbmPath(std::size_t dim, std::vector<double> times, RandomStream stream, bool null_path = false);

  // Identically zero path on the same grid (for deterministic-flow checks).
  static DbmPath zero(std::size_t dim, std::vector<double> times);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] std::size_t steps() const { return times_.size() - 1; }
  [[nodiscard]] bool is_null() const { return null_; }

  // Increment over [t_k, t_{k+1}]: entry variance (1 + delta_xy)(t_{k+1}-t_k)/dim.
  [[nodiscard]] SymmetricMatrix increment(std::size_t k) const;
  // Adds increment k into `m` without allocating.
  void add_increment(std::size_t k, SymmetricMatrix& m) const;
  // Phi(t_k), the cumulative sum of the first k increments.
  [[nodiscard]] SymmetricMatrix value_at(std::size_t k) const;

 private:
  std::size_t dim_;
  std::vector<double> times_;
  RandomStream stream_;
  bool null_;
};

// Throws PreconditionError unless times[0] == 0 and the grid is strictly
// ascending.
DbmPath sample_dbm_path(std::size_t dim, std::vector<double> times, const RandomStream& stream);

// Uniform grid of `steps` intervals on [0, horizon].
std::vector<double> uniform_times(double horizon, std::size_t steps);

}  // namespace ultrametric
