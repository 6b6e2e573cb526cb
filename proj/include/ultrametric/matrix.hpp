// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>

namespace ultrametric {

// Dense real symmetric matrix. Every mutator writes both (i,j) and (j,i), so
// the stored array is symmetric bit for bit.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t dim);

  // Throws PreconditionError unless `dense` is square and exactly symmetric.
  static SymmetricMatrix from_dense(Eigen::MatrixXd dense);

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(data_.rows()); }
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return data_(i, j); }

  void set(std::size_t i, std::size_t j, double value) {
    data_(i, j) = value;
    data_(j, i) = value;
  }
  void add(std::size_t i, std::size_t j, double value) {
    data_(i, j) += value;
    if (i != j) data_(j, i) += value;
  }

  SymmetricMatrix& operator+=(const SymmetricMatrix& other);
  SymmetricMatrix& operator*=(double factor);

  [[nodiscard]] const Eigen::MatrixXd& dense() const { return data_; }
  [[nodiscard]] bool is_symmetric() const;

 private:
  Eigen::MatrixXd data_;
};

SymmetricMatrix operator+(SymmetricMatrix a, const SymmetricMatrix& b);

// Binary dump: 16-byte header (8-byte magic "ULTRAMX1", little-endian uint64
// dimension) followed by dim*dim little-endian float64 entries, row-major.
inline constexpr char kMatrixMagic[8] = {'U', 'L', 'T', 'R', 'A', 'M', 'X', '1'};
void write_matrix(const std::filesystem::path& path, const SymmetricMatrix& m);
SymmetricMatrix read_matrix(const std::filesystem::path& path);

}  // namespace ultrametric
