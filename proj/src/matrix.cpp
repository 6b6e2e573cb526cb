// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/matrix.hpp"

#include "ultrametric/error.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ultrametric {

static_assert(std::endian::native == std::endian::little,
              "matrix dump assumes a little-endian host");

SymmetricMatrix::SymmetricMatrix(std::size_t dim)
    : data_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

SymmetricMatrix SymmetricMatrix::from_dense(Eigen::MatrixXd dense) {
  if (dense.rows() != dense.cols()) throw PreconditionError("matrix is not square");
  SymmetricMatrix m;
  m.data_ = std::move(dense);
  if (!m.is_symmetric()) throw PreconditionError("matrix is not exactly symmetric");
  return m;
}

SymmetricMatrix& SymmetricMatrix::operator+=(const SymmetricMatrix& other) {
  if (other.dim() != dim()) throw PreconditionError("dimension mismatch in matrix sum");
  data_ += other.data_;
  return *this;
}

SymmetricMatrix& SymmetricMatrix::operator*=(double factor) {
  data_ *= factor;
  return *this;
}

bool SymmetricMatrix::is_symmetric() const {
  const Eigen::Index n = data_.rows();
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i)
      if (std::memcmp(&data_(i, j), &data_(j, i), sizeof(double)) != 0) return false;
  return true;
}

SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b) {
  a += b;
  return a;
}

void write_matrix(const std::filesystem::path& path, const SymmetricMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::uint64_t dim = m.dim();
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  // Row-major on disk; symmetric so row i equals column i of the storage.
  for (std::size_t i = 0; i < m.dim(); ++i)
    out.write(reinterpret_cast<const char*>(m.dense().col(static_cast<Eigen::Index>(i)).data()),
              static_cast<std::streamsize>(dim * sizeof(double)));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

SymmetricMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  std::uint64_t dim = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMatrixMagic)))
    throw std::runtime_error(path.string() + ": not a matrix dump");
  Eigen::MatrixXd dense(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  // Reading rows into columns yields the transpose, which is the same matrix
  // when the file is symmetric; from_dense rejects it otherwise.
  in.read(reinterpret_cast<char*>(dense.data()), static_cast<std::streamsize>(dim * dim * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated matrix dump");
  return SymmetricMatrix::from_dense(std::move(dense));
}

}  // namespace ultrametric
