// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/meanfield.hpp"

#include "ultrametric/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace ultrametric {

void FreeConvolutionInput::validate() const {
  if (!(t >= 0.0) || !std::isfinite(t)) throw PreconditionError("free convolution needs t >= 0");
  if (reference_spectrum.empty()) throw PreconditionError("free convolution needs a nonempty reference spectrum");
  if (!std::is_sorted(reference_spectrum.begin(), reference_spectrum.end()))
    throw PreconditionError("reference spectrum must be sorted");
  for (double v : reference_spectrum)
    if (!std::isfinite(v)) throw PreconditionError("reference spectrum must be finite");
  if (!(reference_smoothing >= 0.0)) throw PreconditionError("reference smoothing must be >= 0");
}

Complex self_consistent_map(const FreeConvolutionInput& input, Complex z, Complex m) {
  // A Cauchy-smoothed atom at lambda integrates to 1/(lambda - w - i s) for
  // Im w > 0, so smoothing only shifts the argument.
  const Complex w = z + input.t * m + Complex(0.0, input.reference_smoothing);
  return kernels::resolvent_trace(input.reference_spectrum, w);
}

namespace {

// F(m) and dF/dm.
struct MapValue {
  Complex f;
  Complex df;
};

MapValue map_with_derivative(const FreeConvolutionInput& input, Complex z, Complex m) {
  const Complex w = z + input.t * m + Complex(0.0, input.reference_smoothing);
  Complex sum{}, sum_sq{};
  for (double lambda : input.reference_spectrum) {
    const Complex g = 1.0 / (lambda - w);
    sum += g;
    sum_sq += g * g;
  }
  const double n = static_cast<double>(input.reference_spectrum.size());
  return {sum / n, input.t * sum_sq / n};
}

}  // namespace

namespace {

struct NewtonResult {
  Complex m;
  double residual;
  int iterations;
  double step;
};

// Newton on F(m) - m with step halving until the residual drops and Im m
// stays positive. Stops when no step improves.
NewtonResult newton(const FreeConvolutionInput& input, Complex z, Complex m, double tol, int budget) {
  MapValue cur = map_with_derivative(input, z, m);
  NewtonResult r{m, std::abs(cur.f - m), 0, 1.0};
  while (r.residual > tol && r.iterations < budget) {
    ++r.iterations;
    const Complex delta = (cur.f - r.m) / (1.0 - cur.df);
    bool accepted = false;
    for (double lambda = 1.0; lambda >= 1.0 / 1024.0 && !accepted; lambda *= 0.5) {
      const Complex cand = r.m + lambda * delta;
      if (!(cand.imag() > 0.0) || !std::isfinite(cand.real()) || !std::isfinite(cand.imag())) continue;
      const MapValue next = map_with_derivative(input, z, cand);
      const double res = std::abs(next.f - cand);
      if (res < r.residual) {
        r = {cand, res, r.iterations, lambda};
        cur = next;
        accepted = true;
      }
    }
    if (!accepted) break;
  }
  return r;
}

}  // namespace

MSolution solve_m(const FreeConvolutionInput& input, ComplexEnergy z, const FixedPointOptions& options) {
  input.validate();
  if (!(options.tol > 0.0)) throw PreconditionError("solve_m needs tol > 0");
  MSolution sol;
  if (input.t == 0.0) {
    sol.value = self_consistent_map(input, z.z(), Complex(0.0, 0.0));
    return sol;
  }
  constexpr int kDirectBudget = 60;
  int used = 0;
  const Complex start = self_consistent_map(input, z.z(), Complex(0.0, 0.0));
  NewtonResult r = newton(input, z.z(), start, options.tol, std::min(kDirectBudget, options.max_iterations));
  used += r.iterations;

  if (r.residual > options.tol) {
    // Continuation in eta from a height where the iteration is benign.
    const double target = z.eta();
    double eta = std::max(10.0 * target, 10.0 + 10.0 * input.t);
    NewtonResult level = newton(input, Complex(z.energy(), eta),
                                self_consistent_map(input, Complex(z.energy(), eta), Complex(0.0, 0.0)),
                                options.tol, options.max_iterations - used);
    used += level.iterations;
    double ratio = 0.5;
    while (level.residual <= options.tol && eta > target && used < options.max_iterations) {
      const double next_eta = std::max(target, eta * ratio);
      const NewtonResult trial =
          newton(input, Complex(z.energy(), next_eta), level.m, options.tol, options.max_iterations - used);
      used += trial.iterations;
      if (trial.residual <= options.tol) {
        level = trial;
        eta = next_eta;
        ratio = std::max(0.5, std::sqrt(ratio) * ratio);
      } else {
        ratio = std::sqrt(ratio);
        if (ratio > 0.999) break;
      }
    }
    if (eta <= target && level.residual <= options.tol) r = level;
    else r.residual = std::max(r.residual, level.residual);
  }

  sol.value = r.m;
  sol.residual = r.residual;
  sol.iterations = used;
  sol.final_damping = r.step;
  if (r.residual > options.tol) {
    std::ostringstream msg;
    msg << "self-consistent equation did not converge at z=" << z.energy() << "+" << z.eta() << "i after " << used
        << " iterations (residual " << r.residual << ")";
    throw NumericalError(msg.str());
  }
  return sol;
}

double rho_fc(const FreeConvolutionInput& input, double energy, double eta_limit, const FixedPointOptions& options) {
  if (!(eta_limit > 0.0)) throw PreconditionError("rho_fc needs eta_limit > 0");
  return solve_m(input, ComplexEnergy(energy, eta_limit), options).value.imag() / std::numbers::pi;
}

}  // namespace ultrametric
