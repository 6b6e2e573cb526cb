// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Characteristic curves of the Stieltjes transform under a matrix Brownian
// perturbation H_t = H_0 + Phi(t):
//
//     d/dt gamma(t, z) = -S_t(gamma(t, z)),   gamma(0, z) = z,
//
// integrated with explicit Euler. S_t is known exactly at the path grid times
// (one eigendecomposition each) and interpolated linearly in t in between.

#pragma once

#include "ultrametric/ensemble.hpp"
#include "ultrametric/kernels.hpp"
#include "ultrametric/spectral.hpp"

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ultrametric {

// Spectra of H_0 + Phi(t_k) at every grid time of a path, plus psi_k(x)^2 for
// a set of tracked sites. Immutable after construction and safe to share
// across threads.
class SpectralPath {
 public:
  static SpectralPath compute(const SymmetricMatrix& base, const DbmPath& path,
                              std::span<const SiteIndex> tracked_sites = {});
  // S identically zero on [0, horizon].
  static SpectralPath empty(double horizon);

  [[nodiscard]] std::size_t dim() const { return dim_; }
  [[nodiscard]] const std::vector<double>& times() const { return times_; }
  [[nodiscard]] double horizon() const { return times_.back(); }
  [[nodiscard]] const std::vector<double>& eigenvalues(std::size_t k) const { return eigenvalues_[k]; }

  [[nodiscard]] Complex stieltjes(double t, Complex z) const;
  // G_t(x; z) for a tracked site; throws PreconditionError otherwise.
  [[nodiscard]] Complex local_green(double t, SiteIndex x, Complex z) const;

 private:
  struct Bracket {
    std::size_t k;
    double w;  // weight of grid time k + 1
  };
  [[nodiscard]] Bracket bracket(double t) const;
  [[nodiscard]] std::size_t tracked_slot(SiteIndex x) const;

  std::size_t dim_ = 0;
  std::vector<double> times_;
  std::vector<std::vector<double>> eigenvalues_;
  std::vector<SiteIndex> tracked_;
  std::vector<std::vector<std::vector<double>>> weights_;  // [time][slot][k]
};

// Omega = window + i[eta_low, eta_high] with eta_low = dim^{-1+alpha}.
struct FlowDomain {
  SpectralWindow window;
  double eta_low;
  double eta_high;
  double alpha;

  static FlowDomain at_scale(const SpectralWindow& window, std::size_t dim, double alpha, double eta_high = 10.0);
  void validate() const;
  [[nodiscard]] bool contains(Complex z) const;
  // n_energy evenly spaced energies (endpoints included) times n_eta
  // geometrically spaced heights (endpoints included), energy-major.
  [[nodiscard]] std::vector<ComplexEnergy> grid(std::size_t n_energy, std::size_t n_eta) const;
};

struct FlowOptions {
  double eta_floor = 0.0;  // eta of the domain; tau_z fires at Im gamma <= eta_floor / 2
  double k_lower = 0.0;    // tau(z) threshold 5 / (k_lower eta_floor); disabled when <= 0
  std::size_t steps = 0;   // Euler steps on [0, T]; 0 picks default_flow_steps
  bool freeze_at_integral_stop = false;
};

// ceil(T / dt) with dt = min(eta_floor^2 / 10, T / 1000).
std::size_t default_flow_steps(double horizon, double eta_floor);

struct FlowTrajectory {
  ComplexEnergy z0{0.0, 1.0};
  std::vector<double> times;
  std::vector<Complex> gamma;
  std::vector<Complex> s_values;
  std::optional<std::size_t> stopped_at;           // tau_z
  std::optional<std::size_t> integral_stopped_at;  // tau(z)
  bool blow_up = false;  // Im gamma left the upper half plane; frozen at the last valid point
  double residual = 0.0;  // max_{k <= tau_z} |S_{t_k}(gamma_k) - S_0(z0)|

  // Last index at which the stopped characteristic still moves.
  [[nodiscard]] std::size_t active_until() const;
};

// Integrates up to spath.horizon().
FlowTrajectory integrate_characteristic(const SpectralPath& spath, ComplexEnergy z0, const FlowOptions& options);

namespace kernels {
namespace serial {
std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options);
}
namespace parallel {
std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options);
}
}  // namespace kernels

std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options,
                                                      Execution exec = Execution::parallel);

// max over shared times before either trajectory stops of
// |g1 - g2| - sqrt(Im z1 Im z2 / (Im g1 Im g2)) |z1 - z2|.
// Throws PreconditionError on mismatched time grids.
double lipschitz_check(const FlowTrajectory& a, const FlowTrajectory& b);

// Fraction of trajectories with residual <= c / sqrt(dim eta).
double invariance_event_check(std::span<const FlowTrajectory> trajectories, double c, std::size_t dim, double eta);
// Smallest c for which invariance_event_check reaches `coverage`.
double coverage_constant(std::span<const FlowTrajectory> trajectories, std::size_t dim, double eta,
                         double coverage = 0.95);

// K_l = min Im S_0 over the coarse grid, K_u = max |S_0| / log N over the fine
// grid.
struct FlowConstants {
  double k_lower = 0.0;
  double k_upper = 0.0;
};
FlowConstants measure_flow_constants(const SpectralPath& spath, const FlowDomain& coarse, const FlowDomain& fine,
                                     std::size_t n_energy, std::size_t n_eta);

struct Compatibility {
  double t_k_lower = 0.0;   // T K_l
  double two_eta = 0.0;     // 2 coarse.eta_low
  double drift = 0.0;       // 2 K_u T log N
  double margin = 0.0;      // smallest gap between the fine and coarse domain edges
  [[nodiscard]] bool satisfied() const { return t_k_lower > two_eta && drift <= margin; }
};
Compatibility compatibility(const FlowDomain& coarse, const FlowDomain& fine, double horizon, double k_lower,
                            double k_upper, std::size_t dim);

struct PropagationOptions {
  std::size_t n_energy = 20;
  std::size_t n_eta = 10;
  std::size_t steps = 0;  // 0 picks default_flow_steps(T, fine.eta_low)
  bool enforce_compatibility = true;
};

struct PropagationReport {
  std::size_t points = 0;
  double reachability = 0.0;  // fraction of fine points whose reverse flow ends in the coarse domain
  double min_im_s = 0.0;      // min Im S_T over the fine grid
  double roundtrip_error = 0.0;  // max |gamma(T, lambda(T, z)) - z|
  double k_lower = 0.0;
  double k_upper = 0.0;
  Compatibility compat;
};

// Runs the reverse flow d/dt lambda = S_{T-t}(lambda) from every fine grid
// point. Throws PreconditionError on a compatibility violation when enforced
// and NumericalError if the reverse flow produces non-finite values.
PropagationReport propagate_bound(const SpectralPath& spath, const FlowDomain& coarse, const FlowDomain& fine,
                                  double horizon, double k_lower, double k_upper,
                                  const PropagationOptions& options = {});

struct GreenMomentReport {
  std::vector<double> times;
  std::vector<double> ratio;  // per time, max over z of E|Im G(x; xi)|^q / |Im G_0(x; z)|^q
  double fitted_c = 0.0;      // smallest c with ratio <= (1 - c q / sqrt(N eta))^{-q}
  double trend_slope = 0.0;   // least-squares slope of ratio against time
  [[nodiscard]] bool finite() const;
};

// One SpectralPath per path, tracking x. Moments are taken over paths at each
// path grid time, using the characteristic stopped at min(t, tau_z, tau(z)).
GreenMomentReport green_moment_check(const SymmetricMatrix& base, std::span<const DbmPath> paths, SiteIndex x,
                                     std::span<const ComplexEnergy> z, int q, const FlowOptions& options);

// Columns: t, re_gamma, im_gamma, re_s, im_s, stopped, integral_stopped.
void write_trajectory_csv(std::ostream& out, const FlowTrajectory& trajectory);

}  // namespace ultrametric
