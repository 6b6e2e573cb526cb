// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/error.hpp"
#include "ultrametric/spectral.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

using namespace ultrametric;

namespace {

// (H - z)^{-1} by dense complex LU.
Eigen::MatrixXcd resolvent(const SymmetricMatrix& h, Complex z) {
  const auto n = static_cast<Eigen::Index>(h.dim());
  Eigen::MatrixXcd a = h.dense().cast<Complex>();
  a -= z * Eigen::MatrixXcd::Identity(n, n);
  return a.partialPivLu().inverse();
}

}  // namespace

TEST_CASE("eigendecomposition of a small known matrix") {
  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  const SpectralDecomposition d = eig_sym(SymmetricMatrix::from_dense(m), true);
  REQUIRE(d.eigenvalues.size() == 2);
  CHECK(d.eigenvalues[0] == doctest::Approx(1.0));
  CHECK(d.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(std::abs((*d.eigenvectors)(0, 1)) == doctest::Approx(std::sqrt(0.5)));
  const auto w = d.site_weights(SiteIndex(1));
  CHECK(w[0] + w[1] == doctest::Approx(1.0));
}

TEST_CASE("decomposition defects are small for GOE") {
  const SymmetricMatrix g = sample_goe(512, RandomStream(3));
  const SpectralDecomposition d = eig_sym(g, true);
  const DecompositionDefects def = check_decomposition(g, d);
  CHECK(def.ok());
  CHECK(def.ascending);
  CHECK(!eig_sym(g, false).has_vectors());
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(Eigen::MatrixXd::Random(3, 4)), PreconditionError);
}

TEST_CASE("Stieltjes transform and local Green function match the dense resolvent") {
  const SymmetricMatrix g = sample_goe(40, RandomStream(5));
  const SpectralDecomposition d = eig_sym(g, true);
  for (Complex z : {Complex(0.1, 0.05), Complex(-1.3, 0.5), Complex(2.5, 2.0)}) {
    const Eigen::MatrixXcd r = resolvent(g, z);
    const Complex trace = r.trace() / 40.0;
    const Complex s = stieltjes(d, ComplexEnergy::from_complex(z));
    CHECK(std::abs(s - trace) < 1e-10);
    const Complex gx = local_green(d, SiteIndex(7), ComplexEnergy::from_complex(z));
    CHECK(std::abs(gx - r(6, 6)) < 1e-10);
    CHECK(s.imag() > 0.0);
  }
}

TEST_CASE("batch evaluation is identical in serial and parallel") {
  const SpectralDecomposition d = eig_sym(sample_goe(64, RandomStream(6)), true);
  std::vector<Complex> z;
  for (int i = 0; i < 50; ++i) z.emplace_back(-2.0 + 0.08 * i, 0.01 + 0.02 * i);
  const auto a = stieltjes(d.eigenvalues, z, Execution::serial);
  const auto b = stieltjes(d.eigenvalues, z, Execution::parallel);
  const auto ga = local_green(d, SiteIndex(3), z, Execution::serial);
  const auto gb = local_green(d, SiteIndex(3), z, Execution::parallel);
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(ga[i] == gb[i]);
    CHECK(a[i] == stieltjes(d.eigenvalues, ComplexEnergy::from_complex(z[i])));
  }
  CHECK(stieltjes(std::span<const double>{}, ComplexEnergy(0.0, 1.0)) == Complex(0.0, 0.0));
}

TEST_CASE("smoothed density integrates to one") {
  const SpectralDecomposition d = eig_sym(sample_goe(100, RandomStream(8)), false);
  const double eta = 0.05;
  const double l = std::max(std::abs(d.eigenvalues.front()), std::abs(d.eigenvalues.back())) + 1000.0 * eta;
  const int nodes = 400000;
  const double h = 2.0 * l / nodes;
  double sum = 0.0;
  for (int i = 0; i <= nodes; ++i) sum += (i == 0 || i == nodes ? 0.5 : 1.0) * dos_estimate(d, -l + h * i, eta);
  CHECK(sum * h == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(ComplexEnergy(0.0, 0.0), PreconditionError);
}

TEST_CASE("bulk window quantiles") {
  const std::vector<double> e{1, 2, 3, 4};
  const SpectralWindow w = bulk_window(e, 0.25);
  CHECK(w.lo() == 2.0);
  CHECK(w.hi() == 3.0);
  std::vector<double> big;
  for (int i = 0; i < 100; ++i) big.push_back(i);
  CHECK(bulk_window(big, 0.25).lo() == 25.0);
  CHECK(bulk_window(big, 0.25).hi() == 74.0);
  CHECK_THROWS_AS(bulk_window(std::vector<double>{1, 2, 3}, 0.25), PreconditionError);
  CHECK_THROWS_AS(bulk_window(big, 0.5), PreconditionError);
  CHECK_THROWS_AS(SpectralWindow(1.0, 1.0), PreconditionError);
}

TEST_CASE("eigenvector profiles") {
  Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(8, 8);
  for (int i = 0; i < 8; ++i) diag(i, i) = i;
  const SpectralDecomposition loc = eig_sym(SymmetricMatrix::from_dense(diag), true);
  const ProfileSet p = eigenvector_profiles(loc, SpectralWindow(1.5, 5.5));
  REQUIRE(p.records.size() == 4);
  for (const auto& r : p.records) {
    CHECK(r.sup_norm == doctest::Approx(1.0));
    CHECK(r.ipr == doctest::Approx(1.0));
    CHECK(r.peak.offset() == r.index);
  }
  CHECK(eigenvector_profiles(loc, SpectralWindow(10.0, 11.0)).empty_window);

  // All-ones matrix: the top eigenvector is flat.
  const SpectralDecomposition flat = eig_sym(SymmetricMatrix::from_dense(Eigen::MatrixXd::Ones(16, 16)), true);
  const ProfileSet q = eigenvector_profiles(flat, SpectralWindow(15.0, 17.0));
  REQUIRE(q.records.size() == 1);
  CHECK(q.records[0].sup_norm == doctest::Approx(0.25));
  CHECK(q.records[0].ipr == doctest::Approx(1.0 / 16.0));
  CHECK_THROWS_AS(eigenvector_profiles(eig_sym(SymmetricMatrix::from_dense(diag), false), SpectralWindow(0, 1)),
                  PreconditionError);
}

TEST_CASE("geometric eta grid") {
  const auto g = geometric_eta_grid(0.01, 1.0, 10.0);
  REQUIRE(g.size() == 3);
  CHECK(g[0] == 0.01);
  CHECK(g[1] == doctest::Approx(0.1));
  CHECK(g[2] == 1.0);
  const auto h = geometric_eta_grid(0.01, 10.0);
  CHECK(h.front() == 0.01);
  CHECK(h.back() == 10.0);
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] / h[i - 1] <= std::pow(2.0, 0.25) + 1e-12);
}

TEST_CASE("local law scan on GOE") {
  const SpectralDecomposition d = eig_sym(sample_goe(512, RandomStream(9)), false);
  const SpectralWindow w = bulk_window(d, 0.25);
  const LocalLawReport r = local_law_check(d, w, 0.5, 0.05, 5.0);
  CHECK(r.eta_r == doctest::Approx(1.0 / std::sqrt(512.0)));
  CHECK(r.energy_points >= static_cast<std::size_t>(w.width() / (r.eta_r / 4.0)));
  CHECK(r.min_im > 0.05);
  CHECK(r.max_im < 1.5);
  CHECK(r.passed);
  CHECK(!local_law_check(d, w, 0.5, 0.5, 5.0).passed);
}
