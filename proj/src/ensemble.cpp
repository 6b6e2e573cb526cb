// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/ensemble.hpp"

#include "ultrametric/error.hpp"

#include <cmath>
#include <numbers>

namespace ultrametric {

std::string to_string(Normalization n) { return n == Normalization::raw ? "raw" : "mean_field"; }

Normalization parse_normalization(const std::string& s) {
  if (s == "raw") return Normalization::raw;
  if (s == "mean_field") return Normalization::mean_field;
  throw PreconditionError("unknown normalization '" + s + "' (expected raw or mean_field)");
}

void EnsembleParams::validate(int max_level) const {
  if (n < 0 || n > max_level)
    throw PreconditionError("level n=" + std::to_string(n) + " outside [0, " + std::to_string(max_level) + "]");
  if (normalization == Normalization::raw && !(epsilon > -1.0))
    throw PreconditionError("raw ensemble needs epsilon > -1, got " + std::to_string(epsilon));
  if (!std::isfinite(epsilon)) throw PreconditionError("epsilon must be finite");
}

double coupling_weight(Level r, double epsilon) { return std::exp2(-(1.0 + epsilon) * r.value()); }

double normalization_squared(int n, double epsilon) {
  double sum = 0.0;
  for (int r = 0; r <= n; ++r) sum += coupling_weight(Level(r), epsilon) * (1.0 + std::ldexp(1.0, -r));
  return sum;
}

double entry_variance(SiteIndex x, SiteIndex y, int n, double epsilon) {
  double sum = 0.0;
  for (int r = 0; r <= n; ++r) sum += coupling_weight(Level(r), epsilon) * layer_variance(x, y, Level(r));
  return sum;
}

namespace kernels {
namespace {

inline void fill_row(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream,
                     std::size_t row) {
  const std::size_t k = row / block;
  const std::size_t local = row % block;
  const std::size_t first = k * block;
  RandomStream rs = stream.substream(k, local);
  const double diag_sd = std::numbers::sqrt2 * sd;
  const auto i = static_cast<Eigen::Index>(row);
  for (std::size_t c = first; c < row; ++c) {
    const double v = sd * rs.normal();
    const auto j = static_cast<Eigen::Index>(c);
    m(i, j) += v;
    m(j, i) += v;
  }
  m(i, i) += diag_sd * rs.normal();
}

void check_blocks(const Eigen::MatrixXd& m, std::size_t block) {
  const auto dim = static_cast<std::size_t>(m.rows());
  if (block == 0 || dim % block != 0) throw PreconditionError("block size must divide the dimension");
}

}  // namespace

namespace serial {
void add_goe_blocks(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream) {
  check_blocks(m, block);
  const auto dim = static_cast<std::size_t>(m.rows());
  for (std::size_t row = 0; row < dim; ++row) fill_row(m, block, sd, stream, row);
}
}  // namespace serial

namespace parallel {
void add_goe_blocks(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream) {
  check_blocks(m, block);
  const auto dim = static_cast<std::int64_t>(m.rows());
  // Row i writes (i, j<i) and (j<i, i) only, so rows never collide.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t row = 0; row < dim; ++row) fill_row(m, block, sd, stream, static_cast<std::size_t>(row));
}
}  // namespace parallel
}  // namespace kernels

namespace {

void add_blocks(Eigen::MatrixXd& m, std::size_t block, double sd, const RandomStream& stream, Execution exec) {
  if (exec == Execution::parallel)
    kernels::parallel::add_goe_blocks(m, block, sd, stream);
  else
    kernels::serial::add_goe_blocks(m, block, sd, stream);
}

SymmetricMatrix from_storage(Eigen::MatrixXd m) { return SymmetricMatrix::from_dense(std::move(m)); }

}  // namespace

SymmetricMatrix sample_layer(Level n, Level r, const RandomStream& stream) {
  if (r.value() < 0 || r > n) throw PreconditionError("sample_layer needs 0 <= r <= n");
  const std::size_t dim = volume(n.value());
  const std::size_t block = volume(r.value());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  add_blocks(m, block, std::sqrt(std::ldexp(1.0, -r.value())), stream, Execution::parallel);
  return from_storage(std::move(m));
}

namespace {

Eigen::MatrixXd accumulate_layers(const EnsembleParams& params, const RandomStream& stream, int r_begin, int r_end,
                                  Execution exec) {
  if (r_begin < 0 || r_end > params.n + 1 || r_begin > r_end)
    throw PreconditionError("layer range outside [0, n]");
  const std::size_t dim = params.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (int r = r_begin; r < r_end; ++r) {
    const double t = coupling_weight(Level(r), params.epsilon);
    const std::size_t block = volume(r);
    add_blocks(m, block, std::sqrt(t / static_cast<double>(block)),
               stream.substream(static_cast<std::uint64_t>(r)), exec);
  }
  return m;
}

}  // namespace

SymmetricMatrix sample_layers(const EnsembleParams& params, const RandomStream& stream, int r_begin,
                              int r_end, Execution exec) {
  params.validate();
  return from_storage(accumulate_layers(params, stream, r_begin, r_end, exec));
}

SymmetricMatrix sample_direct(const EnsembleParams& params, const RandomStream& stream, Execution exec) {
  params.validate();
  Eigen::MatrixXd m = accumulate_layers(params, stream, 0, params.n + 1, exec);
  if (params.normalization == Normalization::mean_field)
    m /= std::sqrt(normalization_squared(params.n, params.epsilon));
  return from_storage(std::move(m));
}

namespace {

void build_recursive(Eigen::MatrixXd& m, int k, std::size_t offset, double epsilon, const RandomStream& stream) {
  if (k == 0) {
    RandomStream leaf = stream.substream(0);
    m(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(offset)) += std::numbers::sqrt2 * leaf.normal();
    return;
  }
  const std::size_t half = volume(k - 1);
  build_recursive(m, k - 1, offset, epsilon, stream.substream(1));
  build_recursive(m, k - 1, offset + half, epsilon, stream.substream(2));
  // Phi_{N_k}(t_k) on the block [offset, offset + 2^k).
  const std::size_t size = volume(k);
  const double sd = std::sqrt(coupling_weight(Level(k), epsilon) / static_cast<double>(size));
  auto blk = m.block(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(offset),
                     static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  kernels::serial::add_goe_blocks(phi, size, sd, stream.substream(3));
  blk += phi;
}

}  // namespace

SymmetricMatrix sample_recursive(const EnsembleParams& params, const RandomStream& stream) {
  params.validate();
  if (params.normalization != Normalization::raw)
    throw PreconditionError("the recursive construction is defined for the raw ensemble only");
  const std::size_t dim = params.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  build_recursive(m, params.n, 0, params.epsilon, stream);
  return from_storage(std::move(m));
}

SymmetricMatrix sample_goe(std::size_t dim, const RandomStream& stream) {
  if (dim == 0) throw PreconditionError("GOE dimension must be positive");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  kernels::parallel::add_goe_blocks(m, dim, std::sqrt(1.0 / static_cast<double>(dim)), stream);
  return from_storage(std::move(m));
}

DbmPath::DbmPath(std::size_t dim, std::vector<double> times, RandomStream stream, bool null_path)
    : dim_(dim), times_(std::move(times)), stream_(stream), null_(null_path) {
  if (dim_ == 0) throw PreconditionError("path dimension must be positive");
  if (times_.empty() || times_.front() != 0.0) throw PreconditionError("path grid must start at t = 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw PreconditionError("path grid must be strictly ascending");
}

DbmPath DbmPath::zero(std::size_t dim, std::vector<double> times) {
  return DbmPath(dim, std::move(times), RandomStream(0), true);
}

void DbmPath::add_increment(std::size_t k, SymmetricMatrix& m) const {
  if (k >= steps()) throw PreconditionError("increment index out of range");
  if (m.dim() != dim_) throw PreconditionError("dimension mismatch adding path increment");
  if (null_) return;
  const double dt = times_[k + 1] - times_[k];
  Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  kernels::parallel::add_goe_blocks(inc, dim_, std::sqrt(dt / static_cast<double>(dim_)),
                                    stream_.substream(static_cast<std::uint64_t>(k)));
  m += SymmetricMatrix::from_dense(std::move(inc));
}

SymmetricMatrix DbmPath::increment(std::size_t k) const {
  SymmetricMatrix m(dim_);
  add_increment(k, m);
  return m;
}

SymmetricMatrix DbmPath::value_at(std::size_t k) const {
  if (k > steps()) throw PreconditionError("path time index out of range");
  SymmetricMatrix m(dim_);
  for (std::size_t j = 0; j < k; ++j) add_increment(j, m);
  return m;
}

DbmPath sample_dbm_path(std::size_t dim, std::vector<double> times, const RandomStream& stream) {
  return DbmPath(dim, std::move(times), stream);
}

std::vector<double> uniform_times(double horizon, std::size_t steps) {
  if (!(horizon > 0.0) || steps == 0) throw PreconditionError("uniform_times needs horizon > 0 and steps >= 1");
  std::vector<double> t(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
  t.back() = horizon;
  return t;
}

}  // namespace ultrametric
