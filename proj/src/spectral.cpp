// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/spectral.hpp"

#include "ultrametric/error.hpp"

#include <lapacke.h>

#ifdef ULTRAMETRIC_SCIPY_OPENBLAS
#define UM_LAPACKE_DSYEVD scipy_LAPACKE_dsyevd
#else
#define UM_LAPACKE_DSYEVD LAPACKE_dsyevd
#endif

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace ultrametric {

ComplexEnergy::ComplexEnergy(double energy, double eta) : energy_(energy), eta_(eta) {
  if (!(eta > 0.0) || !std::isfinite(eta) || !std::isfinite(energy))
    throw PreconditionError("spectral parameter needs finite E and eta > 0");
}

SpectralWindow::SpectralWindow(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!(lo < hi)) throw PreconditionError("spectral window needs lo < hi");
}

std::vector<double> SpectralDecomposition::site_weights(SiteIndex x) const {
  if (!eigenvectors) throw PreconditionError("decomposition was computed without eigenvectors");
  if (x.label() < 1 || x.label() > dim) throw PreconditionError("site index outside B_n");
  const auto row = static_cast<Eigen::Index>(x.offset());
  std::vector<double> w(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const double v = (*eigenvectors)(row, static_cast<Eigen::Index>(k));
    w[k] = v * v;
  }
  return w;
}

SpectralDecomposition eig_sym(const SymmetricMatrix& h, bool want_vectors) {
  SpectralDecomposition dec;
  dec.dim = h.dim();
  dec.eigenvalues.resize(dec.dim);
  if (dec.dim == 0) return dec;
  Eigen::MatrixXd a = h.dense();
  const auto n = static_cast<lapack_int>(dec.dim);
  const lapack_int info =
      UM_LAPACKE_DSYEVD(LAPACK_COL_MAJOR, want_vectors ? 'V' : 'N', 'L', n, a.data(), n, dec.eigenvalues.data());
  if (info != 0) {
    std::ostringstream msg;
    msg << "dsyevd failed with info=" << info << " (dim=" << dec.dim << ", frobenius norm=" << h.dense().norm()
        << ", finite=" << (h.dense().allFinite() ? "yes" : "no") << ")";
    throw NumericalError(msg.str());
  }
  if (want_vectors) dec.eigenvectors = std::move(a);
  return dec;
}

DecompositionDefects check_decomposition(const SymmetricMatrix& h, const SpectralDecomposition& dec) {
  if (!dec.has_vectors()) throw PreconditionError("check_decomposition needs eigenvectors");
  DecompositionDefects d;
  const Eigen::MatrixXd& v = *dec.eigenvectors;
  const Eigen::Map<const Eigen::VectorXd> lambda(dec.eigenvalues.data(), static_cast<Eigen::Index>(dec.dim));
  const Eigen::MatrixXd residual = h.dense() * v - v * lambda.asDiagonal();
  d.max_residual = residual.colwise().norm().maxCoeff();
  d.orthogonality =
      (v.transpose() * v - Eigen::MatrixXd::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
  d.tolerance = 1e-10 * static_cast<double>(dec.dim);
  d.norm = dec.dim == 0 ? 0.0 : std::max(std::abs(dec.eigenvalues.front()), std::abs(dec.eigenvalues.back()));
  d.ascending = std::is_sorted(dec.eigenvalues.begin(), dec.eigenvalues.end());
  return d;
}

Complex stieltjes(std::span<const double> eigenvalues, ComplexEnergy z) {
  return kernels::resolvent_trace(eigenvalues, z.z());
}

Complex stieltjes(const SpectralDecomposition& dec, ComplexEnergy z) { return stieltjes(dec.eigenvalues, z); }

std::vector<Complex> stieltjes(std::span<const double> eigenvalues, std::span<const Complex> z, Execution exec) {
  for (const Complex& w : z)
    if (!(w.imag() > 0.0)) throw PreconditionError("stieltjes needs Im z > 0");
  std::vector<Complex> out(z.size());
  if (exec == Execution::parallel)
    kernels::parallel::resolvent_trace(eigenvalues, z, out);
  else
    kernels::serial::resolvent_trace(eigenvalues, z, out);
  return out;
}

Complex local_green(const SpectralDecomposition& dec, SiteIndex x, ComplexEnergy z) {
  const std::vector<double> w = dec.site_weights(x);
  return kernels::weighted_resolvent(dec.eigenvalues, w, z.z());
}

std::vector<Complex> local_green(const SpectralDecomposition& dec, SiteIndex x, std::span<const Complex> z,
                                 Execution exec) {
  for (const Complex& w : z)
    if (!(w.imag() > 0.0)) throw PreconditionError("local_green needs Im z > 0");
  const std::vector<double> w = dec.site_weights(x);
  std::vector<Complex> out(z.size());
  if (exec == Execution::parallel)
    kernels::parallel::weighted_resolvent(dec.eigenvalues, w, z, out);
  else
    kernels::serial::weighted_resolvent(dec.eigenvalues, w, z, out);
  return out;
}

double dos_estimate(std::span<const double> eigenvalues, double energy, double eta) {
  return stieltjes(eigenvalues, ComplexEnergy(energy, eta)).imag() / std::numbers::pi;
}

double dos_estimate(const SpectralDecomposition& dec, double energy, double eta) {
  return dos_estimate(dec.eigenvalues, energy, eta);
}

SpectralWindow bulk_window(std::span<const double> eigenvalues, double q) {
  if (!(q > 0.0 && q < 0.5)) throw PreconditionError("bulk_window needs q in (0, 0.5)");
  const std::size_t n = eigenvalues.size();
  if (n < 4) throw PreconditionError("bulk_window needs at least 4 eigenvalues");
  const auto skip = static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));
  return {eigenvalues[skip], eigenvalues[n - 1 - skip]};
}

SpectralWindow bulk_window(const SpectralDecomposition& dec, double q) { return bulk_window(dec.eigenvalues, q); }

ProfileSet eigenvector_profiles(const SpectralDecomposition& dec, const SpectralWindow& window) {
  if (!dec.has_vectors()) throw PreconditionError("eigenvector_profiles needs eigenvectors");
  ProfileSet set;
  const Eigen::MatrixXd& v = *dec.eigenvectors;
  for (std::size_t k = 0; k < dec.dim; ++k) {
    const double lambda = dec.eigenvalues[k];
    if (!window.contains(lambda)) continue;
    const auto col = v.col(static_cast<Eigen::Index>(k));
    Eigen::Index peak = 0;
    const double sup = col.cwiseAbs().maxCoeff(&peak);
    const double ipr = col.array().square().square().sum();
    set.records.push_back({k, lambda, sup, SiteIndex::from_offset(static_cast<std::size_t>(peak)), ipr});
  }
  set.empty_window = set.records.empty();
  return set;
}

std::vector<double> geometric_eta_grid(double eta_min, double eta_max, double ratio) {
  if (!(eta_min > 0.0) || !(eta_max >= eta_min) || !(ratio > 1.0))
    throw PreconditionError("geometric_eta_grid needs 0 < eta_min <= eta_max and ratio > 1");
  std::vector<double> grid;
  const auto steps = static_cast<std::size_t>(std::ceil(std::log(eta_max / eta_min) / std::log(ratio) - 1e-9));
  for (std::size_t j = 0; j < steps; ++j) grid.push_back(eta_min * std::pow(ratio, static_cast<double>(j)));
  grid.push_back(eta_max);
  return grid;
}

LocalLawReport local_law_check(const SpectralDecomposition& dec, const SpectralWindow& window, double alpha,
                               double k_lower, double k_upper) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("local_law_check needs 0 < alpha < 1");
  if (dec.dim < 2) throw PreconditionError("local_law_check needs dim >= 2");
  LocalLawReport report;
  const double n = static_cast<double>(dec.dim);
  report.eta_r = std::pow(n, -1.0 + alpha);
  const double spacing = report.eta_r / 4.0;
  report.energy_points = static_cast<std::size_t>(std::ceil(window.width() / spacing)) + 1;
  const std::vector<double> etas = geometric_eta_grid(report.eta_r, 10.0);
  report.eta_points = etas.size();

  std::vector<Complex> z;
  z.reserve(report.energy_points * etas.size());
  for (std::size_t i = 0; i < report.energy_points; ++i) {
    const double e = std::min(window.lo() + spacing * static_cast<double>(i), window.hi());
    for (double eta : etas) z.emplace_back(e, eta);
  }
  const std::vector<Complex> s = stieltjes(dec.eigenvalues, z);

  report.min_im = report.min_abs = std::numeric_limits<double>::infinity();
  report.max_im = report.max_abs = 0.0;
  for (const Complex& v : s) {
    report.min_im = std::min(report.min_im, v.imag());
    report.max_im = std::max(report.max_im, v.imag());
    report.min_abs = std::min(report.min_abs, std::abs(v));
    report.max_abs = std::max(report.max_abs, std::abs(v));
  }
  const double log_n = std::log(n);
  report.max_abs_over_log = report.max_abs / log_n;
  report.passed = report.min_im >= k_lower && report.max_im <= k_upper && report.min_abs > k_lower &&
                  report.max_abs < k_upper * log_n;
  return report;
}

}  // namespace ultrametric
