// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/kernels.hpp"

#include "ultrametric/error.hpp"

#include <cstdint>

namespace ultrametric::kernels {

namespace {

// 1/(lambda - E - i eta) = (lambda - E + i eta) / ((lambda - E)^2 + eta^2)
inline Complex trace_sum(std::span<const double> eigenvalues, Complex z) {
  const double e = z.real();
  const double eta = z.imag();
  const double eta2 = eta * eta;
  double re = 0.0;
  double im = 0.0;
  for (double lambda : eigenvalues) {
    const double d = lambda - e;
    const double inv = 1.0 / (d * d + eta2);
    re += d * inv;
    im += eta * inv;
  }
  const double scale = eigenvalues.empty() ? 0.0 : 1.0 / static_cast<double>(eigenvalues.size());
  return {re * scale, im * scale};
}

inline Complex weighted_sum(std::span<const double> eigenvalues, std::span<const double> weights, Complex z) {
  const double e = z.real();
  const double eta = z.imag();
  const double eta2 = eta * eta;
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < eigenvalues.size(); ++k) {
    const double d = eigenvalues[k] - e;
    const double w = weights[k] / (d * d + eta2);
    re += d * w;
    im += eta * w;
  }
  return {re, im};
}

void check(std::span<const Complex> z, std::span<Complex> out) {
  if (z.size() != out.size()) throw PreconditionError("resolvent batch: output size mismatch");
}

void check_weights(std::span<const double> eigenvalues, std::span<const double> weights) {
  if (eigenvalues.size() != weights.size()) throw PreconditionError("resolvent batch: weight size mismatch");
}

}  // namespace

Complex resolvent_trace(std::span<const double> eigenvalues, Complex z) { return trace_sum(eigenvalues, z); }

Complex weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights, Complex z) {
  check_weights(eigenvalues, weights);
  return weighted_sum(eigenvalues, weights, z);
}

namespace serial {

void resolvent_trace(std::span<const double> eigenvalues, std::span<const Complex> z, std::span<Complex> out) {
  check(z, out);
  for (std::size_t m = 0; m < z.size(); ++m) out[m] = trace_sum(eigenvalues, z[m]);
}

void weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights,
                        std::span<const Complex> z, std::span<Complex> out) {
  check(z, out);
  check_weights(eigenvalues, weights);
  for (std::size_t m = 0; m < z.size(); ++m) out[m] = weighted_sum(eigenvalues, weights, z[m]);
}

}  // namespace serial

namespace parallel {

void resolvent_trace(std::span<const double> eigenvalues, std::span<const Complex> z, std::span<Complex> out) {
  check(z, out);
  const auto count = static_cast<std::int64_t>(z.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t m = 0; m < count; ++m) out[m] = trace_sum(eigenvalues, z[m]);
}

void weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights,
                        std::span<const Complex> z, std::span<Complex> out) {
  check(z, out);
  check_weights(eigenvalues, weights);
  const auto count = static_cast<std::int64_t>(z.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t m = 0; m < count; ++m) out[m] = weighted_sum(eigenvalues, weights, z[m]);
}

}  // namespace parallel
}  // namespace ultrametric::kernels
