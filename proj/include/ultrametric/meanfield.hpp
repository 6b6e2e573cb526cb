// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Self-consistent Stieltjes transform of a reference spectrum perturbed by a
// Gaussian matrix of size t:
//
//     M(z) = (1/N) sum_k 1 / (lambda_k - z - t M(z)),   Im M > 0,
//
// solved by damped fixed-point iteration, and the unfolding density
// rho_fc(E) = Im M(E + i eta_limit) / pi.

#pragma once

#include "ultrametric/kernels.hpp"
#include "ultrametric/spectral.hpp"

#include <vector>

namespace ultrametric {

struct FreeConvolutionInput {
  std::vector<double> reference_spectrum;  // ascending
  double t = 0.0;
  // When > 0, the reference measure is the empirical spectrum convolved with a
  // Cauchy kernel of this width instead of the bare atoms.
  double reference_smoothing = 0.0;

  void validate() const;
};

struct FixedPointOptions {
  double tol = 1e-12;
  int max_iterations = 10000;
};

struct MSolution {
  Complex value;
  double residual = 0.0;  // |M - F(M)|
  int iterations = 0;
  double final_damping = 1.0;  // last accepted step length
};

// F(M) for the given input and z.
Complex self_consistent_map(const FreeConvolutionInput& input, Complex z, Complex m);

// Newton iteration on F(M) - M from the t = 0 value, with step halving until
// the residual drops and Im M stays positive. If that stalls, the solution is
// continued down from a large eta, warm-starting each level. Throws
// NumericalError (with the final residual) if tol is not reached within
// max_iterations Newton steps.
MSolution solve_m(const FreeConvolutionInput& input, ComplexEnergy z, const FixedPointOptions& options = {});

double rho_fc(const FreeConvolutionInput& input, double energy, double eta_limit,
              const FixedPointOptions& options = {});

}  // namespace ultrametric
