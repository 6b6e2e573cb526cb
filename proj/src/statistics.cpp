// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/statistics.hpp"

#include "ultrametric/ensemble.hpp"
#include "ultrametric/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>

namespace ultrametric {

namespace {

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw PreconditionError("slope fit needs distinct abscissae");
  return sxy / sxx;
}

std::vector<double> in_window(std::span<const double> eigenvalues, const SpectralWindow& window) {
  std::vector<double> out;
  for (double e : eigenvalues)
    if (window.contains(e)) out.push_back(e);
  return out;
}

}  // namespace

double poisson_mean_gap_ratio() { return 2.0 * std::numbers::ln2 - 1.0; }

double semicircle_density(double x, double radius) {
  if (std::abs(x) >= radius) return 0.0;
  return 2.0 * std::sqrt(radius * radius - x * x) / (std::numbers::pi * radius * radius);
}

double semicircle_cdf(double x, double radius) {
  if (x <= -radius) return 0.0;
  if (x >= radius) return 1.0;
  const double u = x / radius;
  return 0.5 + (u * std::sqrt(1.0 - u * u) + std::asin(u)) / std::numbers::pi;
}

double wigner_surmise_pdf(double s) {
  if (s < 0.0) return 0.0;
  return 0.5 * std::numbers::pi * s * std::exp(-0.25 * std::numbers::pi * s * s);
}

double wigner_surmise_cdf(double s) {
  if (s <= 0.0) return 0.0;
  return 1.0 - std::exp(-0.25 * std::numbers::pi * s * s);
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw PreconditionError("ks_distance needs a nonempty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

GapRatios gap_ratios(std::span<const double> eigenvalues, const SpectralWindow& window) {
  const std::vector<double> e = in_window(eigenvalues, window);
  if (e.size() < 3) throw PreconditionError("gap_ratios needs at least 3 eigenvalues in the window");
  GapRatios out;
  out.values.reserve(e.size() - 2);
  for (std::size_t i = 0; i + 2 < e.size(); ++i) {
    const double a = e[i + 1] - e[i];
    const double b = e[i + 2] - e[i + 1];
    const double hi = std::max(a, b);
    if (hi <= 0.0 || std::min(a, b) <= 0.0) {
      ++out.degenerate;
      out.values.push_back(0.0);
      continue;
    }
    out.values.push_back(std::min(a, b) / hi);
  }
  out.mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / static_cast<double>(out.values.size());
  return out;
}

double UnfoldedSpectrum::mean_gap() const {
  if (unfolded.size() < 2) throw PreconditionError("mean_gap needs at least 2 points");
  return (unfolded.back() - unfolded.front()) / static_cast<double>(unfolded.size() - 1);
}

std::vector<double> UnfoldedSpectrum::spacings() const {
  std::vector<double> s;
  for (std::size_t i = 1; i < unfolded.size(); ++i) s.push_back(unfolded[i] - unfolded[i - 1]);
  return s;
}

UnfoldedSpectrum unfold(std::span<const double> eigenvalues, const std::function<double(double)>& density,
                        const SpectralWindow& window, std::size_t points) {
  if (points < 2) throw PreconditionError("unfold needs at least 2 quadrature nodes");
  const double total = static_cast<double>(eigenvalues.size());
  const double h = window.width() / static_cast<double>(points - 1);
  std::vector<double> cumulative(points, 0.0);
  double prev = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double e = window.lo() + h * static_cast<double>(i);
    const double rho = density(e);
    if (!(rho > 0.0)) throw PreconditionError("unfolding density is not positive at E = " + std::to_string(e));
    if (i > 0) cumulative[i] = cumulative[i - 1] + 0.5 * h * (prev + rho);
    prev = rho;
  }
  UnfoldedSpectrum out;
  out.raw = in_window(eigenvalues, window);
  out.unfolded.reserve(out.raw.size());
  for (double e : out.raw) {
    const double pos = (e - window.lo()) / h;
    const auto i = std::min(static_cast<std::size_t>(pos), points - 2);
    const double frac = pos - static_cast<double>(i);
    out.unfolded.push_back(total * ((1.0 - frac) * cumulative[i] + frac * cumulative[i + 1]));
  }
  return out;
}

UnfoldedSpectrum unfold(std::span<const double> eigenvalues, const FreeConvolutionInput& input, double eta_limit,
                        const SpectralWindow& window, std::size_t points) {
  return unfold(
      eigenvalues, [&](double e) { return rho_fc(input, e, eta_limit); }, window, points);
}

double PairKernel::operator()(double x) const {
  const double u = (x - center) / half_width;
  if (std::abs(u) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

double PairKernel::integral() const {
  // Composite Simpson on the support; the integrand is smooth.
  constexpr int kIntervals = 2000;
  const double a = center - half_width;
  const double h = 2.0 * half_width / kIntervals;
  double sum = (*this)(a) + (*this)(a + 2.0 * half_width);
  for (int i = 1; i < kIntervals; ++i) sum += (i % 2 ? 4.0 : 2.0) * (*this)(a + h * i);
  return sum * h / 3.0;
}

std::vector<double> two_point_statistic(const UnfoldedSpectrum& spectrum, const PairKernel& kernel,
                                        std::span<const double> scales) {
  const std::vector<double>& u = spectrum.unfolded;
  if (u.empty()) throw PreconditionError("two_point_statistic needs a nonempty spectrum");
  std::vector<double> out;
  out.reserve(scales.size());
  const double reach = kernel.center + kernel.half_width;
  for (double s : scales) {
    if (!(s > 0.0)) throw PreconditionError("two_point_statistic scales must be positive");
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      for (std::size_t j = i + 1; j < u.size() && u[j] - u[i] < reach * s; ++j) sum += 2.0 * kernel((u[j] - u[i]) / s);
    out.push_back(sum / static_cast<double>(u.size()));
  }
  return out;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw PreconditionError("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto i = static_cast<std::size_t>(pos);
  if (i + 1 >= values.size()) return values.back();
  return values[i] + (pos - static_cast<double>(i)) * (values[i + 1] - values[i]);
}

double domination_exponent(const std::vector<std::vector<double>>& samples, std::span<const int> levels, double q) {
  if (samples.size() != levels.size()) throw PreconditionError("one sample per level required");
  std::vector<int> distinct(levels.begin(), levels.end());
  std::sort(distinct.begin(), distinct.end());
  if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 3)
    throw PreconditionError("domination_exponent needs at least 3 distinct levels");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x.push_back(levels[i]);
    y.push_back(std::log2(quantile(samples[i], q)));
  }
  return fit_slope(x, y);
}

std::string to_string(FluctuationModel m) {
  return m == FluctuationModel::diagonal_disorder ? "diagonal_disorder" : "full_ensemble";
}

FluctuationFit fluctuation_scaling(const std::vector<std::vector<Complex>>& samples, std::span<const std::size_t> dims,
                                   FluctuationModel model) {
  if (samples.size() != dims.size()) throw PreconditionError("one sample set per dimension required");
  if (dims.size() < 3) throw PreconditionError("fluctuation_scaling needs at least 3 dimensions");
  FluctuationFit fit;
  fit.model = model;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const auto& s = samples[i];
    if (s.size() < 100) throw PreconditionError("fluctuation_scaling needs at least 100 realizations per dimension");
    Complex mean{};
    for (Complex v : s) mean += v;
    mean /= static_cast<double>(s.size());
    double var = 0.0;
    for (Complex v : s) var += std::norm(v - mean);
    const double sd = std::sqrt(var / static_cast<double>(s.size() - 1));
    fit.dims.push_back(static_cast<double>(dims[i]));
    fit.stds.push_back(sd);
    if (sd == 0.0) fit.degenerate = true;
    lx.push_back(std::log(static_cast<double>(dims[i])));
    ly.push_back(std::log(sd));
  }
  fit.exponent = fit.degenerate ? std::numeric_limits<double>::quiet_NaN() : fit_slope(lx, ly);
  return fit;
}

double holder_slope(std::span<const double> etas, std::span<const double> im_green, double min_decades) {
  if (etas.size() != im_green.size() || etas.size() < 2) throw PreconditionError("holder_slope needs matching grids");
  const auto [lo, hi] = std::minmax_element(etas.begin(), etas.end());
  if (!(*lo > 0.0) || std::log10(*hi / *lo) < min_decades)
    throw PreconditionError("eta grid spans fewer than " + std::to_string(min_decades) + " decades");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(im_green[i] > 0.0)) throw PreconditionError("holder_slope needs Im G > 0");
    x.push_back(std::log(etas[i]));
    y.push_back(std::log(2.0 * etas[i] * im_green[i]));
  }
  return fit_slope(x, y);
}

double holder_exponent(std::span<const double> etas, const std::vector<std::vector<double>>& im_green,
                       double min_decades) {
  if (im_green.empty()) throw PreconditionError("holder_exponent needs at least one curve");
  double sum = 0.0;
  for (const auto& curve : im_green) sum += holder_slope(etas, curve, min_decades);
  return sum / static_cast<double>(im_green.size());
}

const GoeReference& ReferenceStatistics::goe_for(std::size_t dim) const {
  for (const GoeReference& g : goe)
    if (g.dim == dim) return g;
  throw PreconditionError("no GOE reference for dim " + std::to_string(dim));
}

ReferenceStatistics generate_references(const ReferenceRequest& request) {
  if (request.samples == 0) throw PreconditionError("references need at least one sample");
  ReferenceStatistics refs;
  refs.seed = request.seed;
  const RandomStream root(request.seed);

  for (std::size_t dim : request.sizes) {
    if (dim < 8) throw PreconditionError("GOE references need dim >= 8");
    GoeReference g;
    g.dim = dim;
    g.samples = request.samples;
    g.window_quantile = request.window_quantile;
    std::vector<double> ratios;
    std::vector<double> spacings;
    for (std::size_t s = 0; s < request.samples; ++s) {
      const SpectralDecomposition dec = eig_sym(sample_goe(dim, root.substream(0, dim, s)), false);
      const SpectralWindow window = bulk_window(dec, request.window_quantile);
      const GapRatios r = gap_ratios(dec.eigenvalues, window);
      ratios.insert(ratios.end(), r.values.begin(), r.values.end());
      const UnfoldedSpectrum u = unfold(
          dec.eigenvalues, [](double e) { return semicircle_density(e); }, window);
      const double mean = u.mean_gap();
      for (double sp : u.spacings()) spacings.push_back(sp / mean);
    }
    const double n = static_cast<double>(ratios.size());
    g.mean_r = std::accumulate(ratios.begin(), ratios.end(), 0.0) / n;
    double var = 0.0;
    for (double r : ratios) var += (r - g.mean_r) * (r - g.mean_r);
    g.mean_r_se = std::sqrt(var / (n - 1.0) / n);
    g.spacing_count = spacings.size();
    std::sort(spacings.begin(), spacings.end());
    for (int i = 0; i <= 80; ++i) {
      const double s = 0.05 * i;
      g.spacing_grid.push_back(s);
      const auto below = std::upper_bound(spacings.begin(), spacings.end(), s) - spacings.begin();
      g.spacing_cdf.push_back(static_cast<double>(below) / static_cast<double>(spacings.size()));
    }
    g.ks_to_surmise = ks_distance(spacings, wigner_surmise_cdf);
    refs.goe.push_back(std::move(g));
  }

  if (request.poisson_gaps >= 2) {
    RandomStream rs = root.substream(1);
    double prev = -std::log(rs.uniform());
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 1; i < request.poisson_gaps; ++i) {
      const double cur = -std::log(rs.uniform());
      const double r = std::min(prev, cur) / std::max(prev, cur);
      sum += r;
      sum2 += r * r;
      prev = cur;
    }
    const double n = static_cast<double>(request.poisson_gaps - 1);
    refs.poisson.gaps = request.poisson_gaps;
    refs.poisson.mean_r = sum / n;
    refs.poisson.mean_r_se = std::sqrt((sum2 / n - refs.poisson.mean_r * refs.poisson.mean_r) / n);
  }
  return refs;
}

void write_references(const std::filesystem::path& path, const ReferenceStatistics& refs) {
  nlohmann::json j;
  j["format_version"] = ReferenceStatistics::kFormatVersion;
  j["seed"] = refs.seed;
  j["goe"] = nlohmann::json::array();
  for (const GoeReference& g : refs.goe) {
    j["goe"].push_back({{"dim", g.dim},
                        {"samples", g.samples},
                        {"window_quantile", g.window_quantile},
                        {"mean_r", g.mean_r},
                        {"mean_r_se", g.mean_r_se},
                        {"spacing_count", g.spacing_count},
                        {"spacing_grid", g.spacing_grid},
                        {"spacing_cdf", g.spacing_cdf},
                        {"ks_to_surmise", g.ks_to_surmise}});
  }
  j["poisson"] = {{"gaps", refs.poisson.gaps}, {"mean_r", refs.poisson.mean_r}, {"mean_r_se", refs.poisson.mean_r_se}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

ReferenceStatistics read_references(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format_version").get<int>() != ReferenceStatistics::kFormatVersion)
      throw ConfigError("unsupported reference format version in " + path.string());
    ReferenceStatistics refs;
    refs.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("goe")) {
      GoeReference g;
      g.dim = e.at("dim").get<std::size_t>();
      g.samples = e.at("samples").get<std::size_t>();
      g.window_quantile = e.at("window_quantile").get<double>();
      g.mean_r = e.at("mean_r").get<double>();
      g.mean_r_se = e.at("mean_r_se").get<double>();
      g.spacing_count = e.at("spacing_count").get<std::size_t>();
      g.spacing_grid = e.at("spacing_grid").get<std::vector<double>>();
      g.spacing_cdf = e.at("spacing_cdf").get<std::vector<double>>();
      g.ks_to_surmise = e.at("ks_to_surmise").get<double>();
      refs.goe.push_back(std::move(g));
    }
    const auto& p = j.at("poisson");
    refs.poisson.gaps = p.at("gaps").get<std::size_t>();
    refs.poisson.mean_r = p.at("mean_r").get<double>();
    refs.poisson.mean_r_se = p.at("mean_r_se").get<double>();
    return refs;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed reference file " + path.string() + ": " + e.what());
  }
}

}  // namespace ultrametric
