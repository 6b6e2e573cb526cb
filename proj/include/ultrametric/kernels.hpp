// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Resolvent sums over a spectrum, evaluated for a batch of spectral
// parameters. Each entry of `out` is
//
//     out[m] = sum_k w_k / (lambda_k - z_m)
//
// with w_k = 1/N (trace) or caller-supplied weights (diagonal Green function,
// w_k = psi_k(x)^2). The serial namespace is the reference; the parallel one
// splits the z batch across OpenMP threads and sums each entry in the same
// order, so both give bit-identical results.

#pragma once

#include <complex>
#include <span>

namespace ultrametric {

using Complex = std::complex<double>;

namespace kernels {
namespace serial {
void resolvent_trace(std::span<const double> eigenvalues, std::span<const Complex> z, std::span<Complex> out);
void weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights,
                        std::span<const Complex> z, std::span<Complex> out);
}  // namespace serial

namespace parallel {
void resolvent_trace(std::span<const double> eigenvalues, std::span<const Complex> z, std::span<Complex> out);
void weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights,
                        std::span<const Complex> z, std::span<Complex> out);
}  // namespace parallel

// Single-point versions used inside ODE steppers.
Complex resolvent_trace(std::span<const double> eigenvalues, Complex z);
Complex weighted_resolvent(std::span<const double> eigenvalues, std::span<const double> weights, Complex z);

}  // namespace kernels
}  // namespace ultrametric
