// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/error.hpp"
#include "ultrametric/statistics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

using namespace ultrametric;

TEST_CASE("gap ratios of an arithmetic progression are one") {
  std::vector<double> e;
  for (int i = 0; i < 20; ++i) e.push_back(0.5 * i);
  const GapRatios g = gap_ratios(e, SpectralWindow(-1.0, 100.0));
  CHECK(g.values.size() == 18);
  CHECK(g.mean == doctest::Approx(1.0));
  CHECK(g.degenerate == 0);
  const GapRatios w = gap_ratios(e, SpectralWindow(1.0, 3.0));
  CHECK(w.values.size() == 3);
  CHECK_THROWS_AS(gap_ratios(e, SpectralWindow(1.0, 1.2)), PreconditionError);
  const std::vector<double> dup{0.0, 1.0, 1.0, 2.0};
  CHECK(gap_ratios(dup, SpectralWindow(-1.0, 3.0)).degenerate == 2);
}

TEST_CASE("Poisson mean gap ratio") {
  // Analytic: r has density 2 / (1 + r)^2 on [0, 1].
  double integral = 0.0;
  const int m = 100000;
  for (int i = 0; i < m; ++i) {
    const double r = (i + 0.5) / m;
    integral += r * 2.0 / ((1.0 + r) * (1.0 + r)) / m;
  }
  CHECK(poisson_mean_gap_ratio() == doctest::Approx(integral).epsilon(1e-8));

  RandomStream rng(11);
  std::vector<double> u(200000);
  for (double& x : u) x = rng.uniform();
  std::sort(u.begin(), u.end());
  const GapRatios g = gap_ratios(u, SpectralWindow(0.0, 1.0));
  CHECK(std::abs(g.mean - poisson_mean_gap_ratio()) < 0.005);
}

TEST_CASE("semicircle and surmise helpers") {
  CHECK(semicircle_density(0.0) == doctest::Approx(1.0 / std::numbers::pi));
  CHECK(semicircle_density(2.5) == 0.0);
  CHECK(semicircle_cdf(-2.0) == doctest::Approx(0.0));
  CHECK(semicircle_cdf(0.0) == doctest::Approx(0.5));
  CHECK(semicircle_cdf(2.0) == doctest::Approx(1.0));
  double mass = 0.0, mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double s = (i + 0.5) * 1e-4;
    mass += wigner_surmise_pdf(s) * 1e-4;
    mean += s * wigner_surmise_pdf(s) * 1e-4;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mean == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(wigner_surmise_cdf(1.0) == doctest::Approx(1.0 - std::exp(-std::numbers::pi / 4.0)));
  const std::vector<double> sample{0.1, 0.4, 0.6, 0.9};
  CHECK(ks_distance(sample, [](double x) { return x; }) == doctest::Approx(0.15));
}

TEST_CASE("unfolding with a uniform density is affine") {
  std::vector<double> e{0.1, 0.25, 0.5, 0.9};
  const UnfoldedSpectrum u = unfold(e, [](double) { return 1.0; }, SpectralWindow(0.0, 1.0), 101);
  REQUIRE(u.unfolded.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(u.unfolded[i] == doctest::Approx(4.0 * e[i]));
  CHECK(u.mean_gap() == doctest::Approx(4.0 * 0.8 / 3.0));
  CHECK(u.spacings().size() == 3);
  CHECK_THROWS_AS(unfold(e, [](double x) { return x - 0.5; }, SpectralWindow(0.0, 1.0)), PreconditionError);
}

TEST_CASE("pair statistic") {
  const PairKernel k;
  CHECK(k(1.0) == doctest::Approx(1.0));
  CHECK(k(0.5) == 0.0);
  CHECK(k(1.6) == 0.0);

  UnfoldedSpectrum lattice;
  for (int i = 0; i < 4000; ++i) lattice.unfolded.push_back(i);
  const double scales[] = {1.0};
  CHECK(two_point_statistic(lattice, k, scales)[0] == doctest::Approx(2.0).epsilon(1e-3));

  RandomStream rng(12);
  UnfoldedSpectrum poisson;
  double x = 0.0;
  for (int i = 0; i < 200000; ++i) {
    x += -std::log(1.0 - rng.uniform());
    poisson.unfolded.push_back(x);
  }
  const double s2[] = {1.0, 2.0};
  const auto v = two_point_statistic(poisson, k, s2);
  CHECK(v[0] == doctest::Approx(2.0 * k.integral()).epsilon(0.02));
  CHECK(v[1] == doctest::Approx(4.0 * k.integral()).epsilon(0.02));
}

TEST_CASE("quantile") {
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK(quantile({1.0, 2.0}, 1.0) == 2.0);
  CHECK(quantile({5.0}, 0.9) == 5.0);
  CHECK_THROWS_AS(quantile({}, 0.5), PreconditionError);
}

TEST_CASE("domination exponent recovers a synthetic power law") {
  RandomStream rng(13);
  std::vector<std::vector<double>> samples;
  const int levels[] = {6, 7, 8, 9, 10};
  for (int n : levels) {
    std::vector<double> s(4000);
    for (double& v : s) v = std::pow(2.0, 0.3 * n) * (1.0 + rng.uniform());
    samples.push_back(s);
  }
  CHECK(domination_exponent(samples, levels) == doctest::Approx(0.3).epsilon(0.07));
  const int two[] = {6, 6, 7, 7, 7};
  CHECK_THROWS_AS(domination_exponent(samples, two), PreconditionError);
}

TEST_CASE("fluctuation scaling on synthetic data") {
  RandomStream rng(14);
  const std::size_t dims[] = {64, 256, 1024};
  std::vector<std::vector<Complex>> samples;
  for (std::size_t n : dims) {
    std::vector<Complex> s;
    for (int i = 0; i < 2000; ++i)
      s.emplace_back(rng.normal() * std::pow(static_cast<double>(n), -0.5), 0.0);
    samples.push_back(s);
  }
  const FluctuationFit f = fluctuation_scaling(samples, dims, FluctuationModel::full_ensemble);
  CHECK(f.exponent == doctest::Approx(-0.5).epsilon(0.06));
  CHECK(!f.degenerate);

  for (auto& s : samples) std::fill(s.begin(), s.end(), Complex(1.0, 1.0));
  const FluctuationFit d = fluctuation_scaling(samples, dims, FluctuationModel::diagonal_disorder);
  CHECK(d.degenerate);
  CHECK(std::isnan(d.exponent));
  samples.pop_back();
  CHECK_THROWS_AS(fluctuation_scaling(samples, dims, FluctuationModel::full_ensemble), PreconditionError);
}

TEST_CASE("Hoelder slope of an atom and of a smooth density") {
  const std::vector<double> etas = geometric_eta_grid(1e-3, 1e-1);
  std::vector<double> atom, smooth;
  for (double eta : etas) {
    atom.push_back(1.0 / eta);  // Im of 1 / (0 - i eta)
    smooth.push_back(std::numbers::pi * semicircle_density(0.3));
  }
  CHECK(holder_slope(etas, atom) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(holder_slope(etas, smooth) == doctest::Approx(1.0));
  CHECK(holder_exponent(etas, {atom, smooth}) == doctest::Approx(0.5));
  const std::vector<double> narrow = geometric_eta_grid(1e-2, 2e-2);
  CHECK_THROWS_AS(holder_slope(narrow, std::vector<double>(narrow.size(), 1.0)), PreconditionError);
}

TEST_CASE("reference statistics are deterministic and round-trip") {
  ReferenceRequest req;
  req.sizes = {64};
  req.samples = 3;
  req.poisson_gaps = 20000;
  req.seed = 5;
  const ReferenceStatistics a = generate_references(req);
  const ReferenceStatistics b = generate_references(req);
  CHECK(a.goe_for(64).mean_r == b.goe_for(64).mean_r);
  CHECK(a.poisson.mean_r == b.poisson.mean_r);
  CHECK(std::abs(a.poisson.mean_r - poisson_mean_gap_ratio()) < 5.0 * a.poisson.mean_r_se + 1e-3);
  CHECK(a.goe_for(64).mean_r > a.poisson.mean_r);
  CHECK_THROWS_AS((void)a.goe_for(128), PreconditionError);

  const auto path = std::filesystem::temp_directory_path() / "um_refs_roundtrip.json";
  write_references(path, a);
  const ReferenceStatistics c = read_references(path);
  CHECK(c.seed == 5);
  CHECK(c.goe_for(64).spacing_cdf == a.goe_for(64).spacing_cdf);
  CHECK(c.poisson.mean_r == a.poisson.mean_r);
  std::filesystem::remove(path);
}
