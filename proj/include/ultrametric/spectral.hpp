// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Eigendecomposition and resolvent observables computed from it: the
// normalized trace S(z), the diagonal Green function G(x; z), smoothed density
// of states, quantile bulk windows, eigenvector localization measures and the
// local-law scan over Omega = window + i(eta_r, 10).

#pragma once

#include "ultrametric/ensemble.hpp"
#include "ultrametric/hierarchy.hpp"
#include "ultrametric/kernels.hpp"
#include "ultrametric/matrix.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace ultrametric {

// z = E + i eta with eta > 0.
class ComplexEnergy {
 public:
  ComplexEnergy(double energy, double eta);
  static ComplexEnergy from_complex(Complex z) { return {z.real(), z.imag()}; }

  [[nodiscard]] double energy() const { return energy_; }
  [[nodiscard]] double eta() const { return eta_; }
  [[nodiscard]] Complex z() const { return {energy_, eta_}; }

 private:
  double energy_;
  double eta_;
};

struct SpectralDecomposition {
  std::size_t dim = 0;
  std::vector<double> eigenvalues;              // ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  // column k belongs to eigenvalues[k]

  [[nodiscard]] bool has_vectors() const { return eigenvectors.has_value(); }
  // psi_k(x)^2 for all k.
  [[nodiscard]] std::vector<double> site_weights(SiteIndex x) const;
};

class SpectralWindow {
 public:
  SpectralWindow(double lo, double hi);
  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double hi() const { return hi_; }
  [[nodiscard]] double width() const { return hi_ - lo_; }
  [[nodiscard]] bool contains(double e) const { return lo_ <= e && e <= hi_; }

 private:
  double lo_;
  double hi_;
};

// LAPACK dsyevd. Throws NumericalError with matrix diagnostics when the
// routine reports failure.
SpectralDecomposition eig_sym(const SymmetricMatrix& h, bool want_vectors);

// Residual and orthonormality defects of a decomposition with vectors,
// against tol = 1e-10 * dim: max_k ||H v_k - lambda_k v_k|| <= tol (||H|| + 1)
// and max |V^T V - I| <= tol.
struct DecompositionDefects {
  double max_residual = 0.0;
  double orthogonality = 0.0;
  double tolerance = 0.0;
  double norm = 0.0;
  bool ascending = true;
  [[nodiscard]] bool ok() const {
    return ascending && max_residual <= tolerance * (norm + 1.0) && orthogonality <= tolerance;
  }
};
DecompositionDefects check_decomposition(const SymmetricMatrix& h, const SpectralDecomposition& dec);

// S(z) = (1/N) sum_k 1/(lambda_k - z). Zero for an empty spectrum.
Complex stieltjes(std::span<const double> eigenvalues, ComplexEnergy z);
Complex stieltjes(const SpectralDecomposition& dec, ComplexEnergy z);
std::vector<Complex> stieltjes(std::span<const double> eigenvalues, std::span<const Complex> z,
                               Execution exec = Execution::parallel);

// G(x; z) = sum_k psi_k(x)^2 / (lambda_k - z). Needs eigenvectors.
Complex local_green(const SpectralDecomposition& dec, SiteIndex x, ComplexEnergy z);
std::vector<Complex> local_green(const SpectralDecomposition& dec, SiteIndex x, std::span<const Complex> z,
                                 Execution exec = Execution::parallel);

// Im S(E + i eta) / pi.
double dos_estimate(std::span<const double> eigenvalues, double energy, double eta);
double dos_estimate(const SpectralDecomposition& dec, double energy, double eta);

// Window between the q- and (1-q)-quantiles, nearest-rank convention:
// lo = lambda[floor(q N)], hi = lambda[N - 1 - floor(q N)] (0-based, ascending).
// For (1, 2, 3, 4) and q = 0.25 this is (2, 3).
SpectralWindow bulk_window(std::span<const double> eigenvalues, double q = 0.25);
SpectralWindow bulk_window(const SpectralDecomposition& dec, double q = 0.25);

struct EigenvectorProfile {
  std::size_t index;
  double eigenvalue;
  double sup_norm;  // max_x |psi(x)|
  SiteIndex peak;   // argmax_x |psi(x)|
  double ipr;       // sum_x psi(x)^4
};

struct ProfileSet {
  std::vector<EigenvectorProfile> records;
  bool empty_window = false;
};

ProfileSet eigenvector_profiles(const SpectralDecomposition& dec, const SpectralWindow& window);

// Geometric grid from eta_min to eta_max inclusive, ratio 2^{1/4} by default.
std::vector<double> geometric_eta_grid(double eta_min, double eta_max, double ratio = 1.189207115002721);

struct LocalLawReport {
  double eta_r = 0.0;
  std::size_t energy_points = 0;
  std::size_t eta_points = 0;
  double min_im = 0.0;
  double max_im = 0.0;
  double min_abs = 0.0;
  double max_abs = 0.0;
  double max_abs_over_log = 0.0;  // max |S| / log N
  bool passed = false;            // Im S in [K_l, K_u] and |S| in (K_l, K_u log N)
};

// Scans Omega = window + i(eta_r, 10), eta_r = N^{-1+alpha}, on an energy grid
// with spacing <= eta_r / 4 and the geometric eta grid.
LocalLawReport local_law_check(const SpectralDecomposition& dec, const SpectralWindow& window, double alpha,
                               double k_lower, double k_upper);

}  // namespace ultrametric
