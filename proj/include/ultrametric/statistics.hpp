// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Local eigenvalue statistics and scaling fits.

#pragma once

#include "ultrametric/kernels.hpp"
#include "ultrametric/meanfield.hpp"
#include "ultrametric/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ultrametric {

// 2 ln 2 - 1.
double poisson_mean_gap_ratio();

// Semicircle of radius R: density 2 sqrt(R^2 - x^2) / (pi R^2).
double semicircle_density(double x, double radius = 2.0);
double semicircle_cdf(double x, double radius = 2.0);

// p(s) = (pi s / 2) exp(-pi s^2 / 4).
double wigner_surmise_pdf(double s);
double wigner_surmise_cdf(double s);

// sup_x |F_n(x) - F(x)| for a sample (sorted in place).
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

struct GapRatios {
  std::vector<double> values;
  double mean = 0.0;
  std::size_t degenerate = 0;  // zero gaps; r = 0 is recorded for them
};

// r_i = min(s_i, s_{i+1}) / max(s_i, s_{i+1}) over the eigenvalues inside the
// window. Needs at least 3 of them.
GapRatios gap_ratios(std::span<const double> eigenvalues, const SpectralWindow& window);

struct UnfoldedSpectrum {
  std::vector<double> raw;
  std::vector<double> unfolded;
  [[nodiscard]] double mean_gap() const;
  [[nodiscard]] std::vector<double> spacings() const;
};

// unfolded_k = N * integral_{lo}^{lambda_k} rho, trapezoid rule on `points`
// uniform nodes across the window. N is the size of the full spectrum.
// Throws PreconditionError when rho <= 0 at a node.
UnfoldedSpectrum unfold(std::span<const double> eigenvalues, const std::function<double(double)>& density,
                        const SpectralWindow& window, std::size_t points = 2048);
UnfoldedSpectrum unfold(std::span<const double> eigenvalues, const FreeConvolutionInput& input, double eta_limit,
                        const SpectralWindow& window, std::size_t points = 2048);

// Compactly supported smooth kernel O(x) = exp(1 - 1 / (1 - ((x - c) / w)^2))
// on |x - c| < w, with O(c) = 1.
struct PairKernel {
  double center = 1.0;
  double half_width = 0.5;
  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] double integral() const;  // over the real line
};

// (1/n) sum_{i != j} O(|u_i - u_j| / s) for each scale s.
std::vector<double> two_point_statistic(const UnfoldedSpectrum& spectrum, const PairKernel& kernel,
                                        std::span<const double> scales);

// Type-7 (linear interpolation) quantile.
double quantile(std::vector<double> values, double q);

// Least-squares slope of log2(quantile_q(samples[i])) against levels[i].
// Needs at least 3 distinct levels.
double domination_exponent(const std::vector<std::vector<double>>& samples, std::span<const int> levels,
                           double q = 0.9);

enum class FluctuationModel { diagonal_disorder, full_ensemble };
std::string to_string(FluctuationModel m);

struct FluctuationFit {
  FluctuationModel model = FluctuationModel::full_ensemble;
  std::vector<double> dims;
  std::vector<double> stds;  // sqrt(E|S - ES|^2)
  double exponent = 0.0;     // NaN when some std is zero
  bool degenerate = false;
};

// Slope of log std(S(z)) against log dim. Needs >= 3 dims and >= 100 samples
// per dim.
FluctuationFit fluctuation_scaling(const std::vector<std::vector<Complex>>& samples, std::span<const std::size_t> dims,
                                   FluctuationModel model);

// Least-squares slope of log(2 eta Im G) against log eta for one curve.
// Throws PreconditionError when the eta grid spans fewer than min_decades.
double holder_slope(std::span<const double> etas, std::span<const double> im_green, double min_decades = 0.75);
// Mean slope over curves sharing the eta grid.
double holder_exponent(std::span<const double> etas, const std::vector<std::vector<double>>& im_green,
                       double min_decades = 0.75);

struct GoeReference {
  std::size_t dim = 0;
  std::size_t samples = 0;
  double window_quantile = 0.25;
  double mean_r = 0.0;
  double mean_r_se = 0.0;
  std::size_t spacing_count = 0;
  std::vector<double> spacing_grid;
  std::vector<double> spacing_cdf;
  double ks_to_surmise = 0.0;
};

struct PoissonReference {
  std::size_t gaps = 0;
  double mean_r = 0.0;
  double mean_r_se = 0.0;
};

struct ReferenceStatistics {
  static constexpr int kFormatVersion = 1;
  std::uint64_t seed = 0;
  std::vector<GoeReference> goe;
  PoissonReference poisson;

  [[nodiscard]] const GoeReference& goe_for(std::size_t dim) const;
};

struct ReferenceRequest {
  std::uint64_t seed = 0;
  std::vector<std::size_t> sizes{2048};
  std::size_t samples = 10;
  std::size_t poisson_gaps = 1000000;
  double window_quantile = 0.25;
};

// GOE references come from sample_goe realizations unfolded with the radius-2
// semicircle; Poisson references from i.i.d. exponential gaps.
ReferenceStatistics generate_references(const ReferenceRequest& request);

void write_references(const std::filesystem::path& path, const ReferenceStatistics& refs);
ReferenceStatistics read_references(const std::filesystem::path& path);

}  // namespace ultrametric
