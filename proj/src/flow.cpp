// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/flow.hpp"

#include "ultrametric/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace ultrametric {

SpectralPath SpectralPath::compute(const SymmetricMatrix& base, const DbmPath& path,
                                   std::span<const SiteIndex> tracked_sites) {
  if (base.dim() != path.dim()) throw PreconditionError("base and path dimensions differ");
  for (SiteIndex x : tracked_sites)
    if (x.offset() >= base.dim()) throw PreconditionError("tracked site outside the lattice");
  SpectralPath sp;
  sp.dim_ = base.dim();
  sp.times_ = path.times();
  sp.tracked_.assign(tracked_sites.begin(), tracked_sites.end());
  const bool vectors = !sp.tracked_.empty();
  SymmetricMatrix h = base;
  for (std::size_t k = 0; k < sp.times_.size(); ++k) {
    if (k > 0 && !path.is_null()) path.add_increment(k - 1, h);
    SpectralDecomposition dec = eig_sym(h, vectors);
    if (vectors) {
      std::vector<std::vector<double>> w;
      w.reserve(sp.tracked_.size());
      for (SiteIndex x : sp.tracked_) w.push_back(dec.site_weights(x));
      sp.weights_.push_back(std::move(w));
    }
    sp.eigenvalues_.push_back(std::move(dec.eigenvalues));
  }
  return sp;
}

SpectralPath SpectralPath::empty(double horizon) {
  if (!(horizon >= 0.0)) throw PreconditionError("horizon must be >= 0");
  SpectralPath sp;
  sp.times_ = horizon > 0.0 ? std::vector<double>{0.0, horizon} : std::vector<double>{0.0};
  sp.eigenvalues_.assign(sp.times_.size(), {});
  return sp;
}

SpectralPath::Bracket SpectralPath::bracket(double t) const {
  if (times_.size() == 1 || t <= times_.front()) return {0, 0.0};
  if (t >= times_.back()) return {times_.size() - 1, 0.0};
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - times_.begin()) - 1;
  return {k, (t - times_[k]) / (times_[k + 1] - times_[k])};
}

std::size_t SpectralPath::tracked_slot(SiteIndex x) const {
  const auto it = std::find(tracked_.begin(), tracked_.end(), x);
  if (it == tracked_.end()) throw PreconditionError("site is not tracked by this spectral path");
  return static_cast<std::size_t>(it - tracked_.begin());
}

Complex SpectralPath::stieltjes(double t, Complex z) const {
  const Bracket b = bracket(t);
  const Complex s0 = kernels::resolvent_trace(eigenvalues_[b.k], z);
  if (b.w == 0.0) return s0;
  return (1.0 - b.w) * s0 + b.w * kernels::resolvent_trace(eigenvalues_[b.k + 1], z);
}

Complex SpectralPath::local_green(double t, SiteIndex x, Complex z) const {
  const std::size_t slot = tracked_slot(x);
  const Bracket b = bracket(t);
  const Complex g0 = kernels::weighted_resolvent(eigenvalues_[b.k], weights_[b.k][slot], z);
  if (b.w == 0.0) return g0;
  return (1.0 - b.w) * g0 + b.w * kernels::weighted_resolvent(eigenvalues_[b.k + 1], weights_[b.k + 1][slot], z);
}

FlowDomain FlowDomain::at_scale(const SpectralWindow& window, std::size_t dim, double alpha, double eta_high) {
  if (dim == 0) throw PreconditionError("flow domain needs dim >= 1");
  FlowDomain d{window, std::pow(static_cast<double>(dim), -1.0 + alpha), eta_high, alpha};
  d.validate();
  return d;
}

void FlowDomain::validate() const {
  if (!(eta_low > 0.0 && eta_low < eta_high)) throw PreconditionError("flow domain needs 0 < eta_low < eta_high");
}

bool FlowDomain::contains(Complex z) const {
  return window.contains(z.real()) && eta_low <= z.imag() && z.imag() <= eta_high;
}

std::vector<ComplexEnergy> FlowDomain::grid(std::size_t n_energy, std::size_t n_eta) const {
  if (n_energy < 2 || n_eta < 2) throw PreconditionError("flow grid needs at least 2 points per axis");
  std::vector<ComplexEnergy> out;
  out.reserve(n_energy * n_eta);
  const double ratio = std::pow(eta_high / eta_low, 1.0 / static_cast<double>(n_eta - 1));
  for (std::size_t i = 0; i < n_energy; ++i) {
    const double e = window.lo() + window.width() * static_cast<double>(i) / static_cast<double>(n_energy - 1);
    for (std::size_t j = 0; j < n_eta; ++j) {
      const double eta = j + 1 == n_eta ? eta_high : eta_low * std::pow(ratio, static_cast<double>(j));
      out.emplace_back(e, eta);
    }
  }
  return out;
}

std::size_t default_flow_steps(double horizon, double eta_floor) {
  if (!(horizon >= 0.0) || !(eta_floor > 0.0)) throw PreconditionError("flow steps need T >= 0 and eta > 0");
  if (horizon == 0.0) return 0;
  const double dt = std::min(eta_floor * eta_floor / 10.0, horizon / 1000.0);
  return static_cast<std::size_t>(std::ceil(horizon / dt * (1.0 - 1e-12)));
}

std::size_t FlowTrajectory::active_until() const {
  std::size_t end = gamma.size() - 1;
  if (stopped_at) end = std::min(end, *stopped_at);
  return end;
}

namespace {

std::size_t resolve_steps(double horizon, const FlowOptions& options) {
  if (!(options.eta_floor > 0.0)) throw PreconditionError("flow needs eta_floor > 0");
  const std::size_t steps = options.steps == 0 ? default_flow_steps(horizon, options.eta_floor) : options.steps;
  if (horizon > 0.0) {
    const double dt = horizon / static_cast<double>(steps);
    if (dt > options.eta_floor * options.eta_floor / 10.0 * (1.0 + 1e-9))
      throw PreconditionError("flow step exceeds eta_floor^2 / 10");
  }
  return steps;
}

}  // namespace

FlowTrajectory integrate_characteristic(const SpectralPath& spath, ComplexEnergy z0, const FlowOptions& options) {
  if (z0.eta() < options.eta_floor) throw PreconditionError("characteristic must start at Im z >= eta_floor");
  const double horizon = spath.horizon();
  const std::size_t steps = resolve_steps(horizon, options);
  const double dt = steps == 0 ? 0.0 : horizon / static_cast<double>(steps);
  const double threshold =
      options.k_lower > 0.0 ? 5.0 / (options.k_lower * options.eta_floor) : std::numeric_limits<double>::infinity();

  FlowTrajectory tr;
  tr.z0 = z0;
  tr.times.resize(steps + 1);
  tr.gamma.resize(steps + 1);
  tr.s_values.resize(steps + 1);
  const Complex s0 = spath.stieltjes(0.0, z0.z());
  Complex g = z0.z();
  bool frozen = false;
  double integral = 0.0;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = k == steps ? horizon : dt * static_cast<double>(k);
    tr.times[k] = t;
    tr.gamma[k] = g;
    const Complex s = k == 0 ? s0 : spath.stieltjes(t, g);
    tr.s_values[k] = s;
    if (!tr.stopped_at || k <= *tr.stopped_at) tr.residual = std::max(tr.residual, std::abs(s - s0));
    if (k == steps) break;
    if (frozen) continue;

    Complex next = g - dt * s;
    if (!(next.imag() > 0.0) || !std::isfinite(next.real()) || !std::isfinite(next.imag())) {
      tr.blow_up = true;
      tr.stopped_at = k;
      frozen = true;
      continue;
    }
    integral += 0.5 * dt * (1.0 / (g.imag() * g.imag()) + 1.0 / (next.imag() * next.imag()));
    g = next;
    if (!tr.integral_stopped_at && integral >= threshold) {
      tr.integral_stopped_at = k + 1;
      if (options.freeze_at_integral_stop) frozen = true;
    }
    if (g.imag() <= options.eta_floor / 2.0) {
      tr.stopped_at = k + 1;
      frozen = true;
    }
  }
  return tr;
}

namespace kernels {
namespace serial {
std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options) {
  std::vector<FlowTrajectory> out;
  out.reserve(z0.size());
  for (const ComplexEnergy& z : z0) out.push_back(integrate_characteristic(spath, z, options));
  return out;
}
}  // namespace serial

namespace parallel {
std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options) {
  for (const ComplexEnergy& z : z0)
    if (z.eta() < options.eta_floor) throw PreconditionError("characteristic must start at Im z >= eta_floor");
  resolve_steps(spath.horizon(), options);
  std::vector<FlowTrajectory> out(z0.size());
  const auto n = static_cast<std::ptrdiff_t>(z0.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = integrate_characteristic(spath, z0[i], options);
  return out;
}
}  // namespace parallel
}  // namespace kernels

std::vector<FlowTrajectory> integrate_characteristics(const SpectralPath& spath, std::span<const ComplexEnergy> z0,
                                                      const FlowOptions& options, Execution exec) {
  return exec == Execution::serial ? kernels::serial::integrate_characteristics(spath, z0, options)
                                   : kernels::parallel::integrate_characteristics(spath, z0, options);
}

double lipschitz_check(const FlowTrajectory& a, const FlowTrajectory& b) {
  if (a.times != b.times) throw PreconditionError("lipschitz_check needs identical time grids");
  const Complex z1 = a.z0.z();
  const Complex z2 = b.z0.z();
  const double dz = std::abs(z1 - z2);
  const std::size_t end = std::min(a.active_until(), b.active_until());
  double worst = 0.0;
  for (std::size_t k = 0; k <= end; ++k) {
    const double bound = std::sqrt(z1.imag() * z2.imag() / (a.gamma[k].imag() * b.gamma[k].imag())) * dz;
    worst = std::max(worst, std::abs(a.gamma[k] - b.gamma[k]) - bound);
  }
  return worst;
}

double invariance_event_check(std::span<const FlowTrajectory> trajectories, double c, std::size_t dim, double eta) {
  if (trajectories.empty()) throw PreconditionError("invariance_event_check needs trajectories");
  const double limit = c / std::sqrt(static_cast<double>(dim) * eta);
  const auto hits = std::count_if(trajectories.begin(), trajectories.end(),
                                  [&](const FlowTrajectory& t) { return t.residual <= limit; });
  return static_cast<double>(hits) / static_cast<double>(trajectories.size());
}

double coverage_constant(std::span<const FlowTrajectory> trajectories, std::size_t dim, double eta, double coverage) {
  if (trajectories.empty()) throw PreconditionError("coverage_constant needs trajectories");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw PreconditionError("coverage must be in (0, 1]");
  std::vector<double> scaled;
  scaled.reserve(trajectories.size());
  const double scale = std::sqrt(static_cast<double>(dim) * eta);
  for (const FlowTrajectory& t : trajectories) scaled.push_back(t.residual * scale);
  std::sort(scaled.begin(), scaled.end());
  const auto need = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(scaled.size())));
  return scaled[std::max<std::size_t>(need, 1) - 1];
}

FlowConstants measure_flow_constants(const SpectralPath& spath, const FlowDomain& coarse, const FlowDomain& fine,
                                     std::size_t n_energy, std::size_t n_eta) {
  FlowConstants c{std::numeric_limits<double>::infinity(), 0.0};
  for (const ComplexEnergy& z : coarse.grid(n_energy, n_eta))
    c.k_lower = std::min(c.k_lower, spath.stieltjes(0.0, z.z()).imag());
  const double log_n = std::log(static_cast<double>(spath.dim()));
  for (const ComplexEnergy& z : fine.grid(n_energy, n_eta))
    c.k_upper = std::max(c.k_upper, std::abs(spath.stieltjes(0.0, z.z())) / log_n);
  return c;
}

Compatibility compatibility(const FlowDomain& coarse, const FlowDomain& fine, double horizon, double k_lower,
                            double k_upper, std::size_t dim) {
  Compatibility c;
  c.t_k_lower = horizon * k_lower;
  c.two_eta = 2.0 * coarse.eta_low;
  c.drift = 2.0 * k_upper * horizon * std::log(static_cast<double>(dim));
  c.margin = std::min({fine.window.lo() - coarse.window.lo(), coarse.window.hi() - fine.window.hi(),
                       coarse.eta_high - fine.eta_high});
  return c;
}

PropagationReport propagate_bound(const SpectralPath& spath, const FlowDomain& coarse, const FlowDomain& fine,
                                  double horizon, double k_lower, double k_upper, const PropagationOptions& options) {
  coarse.validate();
  fine.validate();
  if (!(horizon >= 0.0) || horizon > spath.horizon() * (1.0 + 1e-12))
    throw PreconditionError("propagation time must lie within the spectral path");
  PropagationReport rep;
  rep.k_lower = k_lower;
  rep.k_upper = k_upper;
  rep.compat = compatibility(coarse, fine, horizon, k_lower, k_upper, spath.dim());
  if (options.enforce_compatibility && !rep.compat.satisfied())
    throw PreconditionError("compatibility violated: T K_l = " + std::to_string(rep.compat.t_k_lower) +
                            " vs 2 eta = " + std::to_string(rep.compat.two_eta) + ", drift " +
                            std::to_string(rep.compat.drift) + " vs margin " + std::to_string(rep.compat.margin));

  const std::size_t steps = options.steps == 0 ? default_flow_steps(horizon, fine.eta_low) : options.steps;
  const double dt = steps == 0 ? 0.0 : horizon / static_cast<double>(steps);
  const std::vector<ComplexEnergy> points = fine.grid(options.n_energy, options.n_eta);
  rep.points = points.size();
  std::vector<char> inside(points.size(), 0);
  std::vector<double> roundtrip(points.size(), 0.0);
  std::vector<double> im_s(points.size(), 0.0);
  bool bad = false;
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic) reduction(|| : bad)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Complex z = points[i].z();
    im_s[i] = spath.stieltjes(horizon, z).imag();
    Complex lam = z;
    for (std::size_t k = 0; k < steps; ++k) lam += dt * spath.stieltjes(horizon - dt * static_cast<double>(k), lam);
    if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag())) {
      bad = true;
      continue;
    }
    inside[i] = coarse.contains(lam);
    Complex g = lam;
    for (std::size_t k = 0; k < steps; ++k) g -= dt * spath.stieltjes(dt * static_cast<double>(k), g);
    roundtrip[i] = std::abs(g - z);
  }
  if (bad) throw NumericalError("reverse flow produced non-finite values");
  rep.reachability =
      static_cast<double>(std::count(inside.begin(), inside.end(), 1)) / static_cast<double>(points.size());
  rep.min_im_s = *std::min_element(im_s.begin(), im_s.end());
  rep.roundtrip_error = *std::max_element(roundtrip.begin(), roundtrip.end());
  return rep;
}

bool GreenMomentReport::finite() const {
  return std::all_of(ratio.begin(), ratio.end(), [](double r) { return std::isfinite(r); }) &&
         std::isfinite(fitted_c);
}

GreenMomentReport green_moment_check(const SymmetricMatrix& base, std::span<const DbmPath> paths, SiteIndex x,
                                     std::span<const ComplexEnergy> z, int q, const FlowOptions& options) {
  if (paths.empty() || z.empty()) throw PreconditionError("green_moment_check needs paths and energies");
  if (q < 2 || q > 32) throw PreconditionError("green_moment_check needs 2 <= q <= 32");
  const std::vector<double>& grid = paths.front().times();
  for (const DbmPath& p : paths)
    if (p.times() != grid) throw PreconditionError("all paths must share one time grid");

  const std::size_t nz = z.size();
  std::vector<std::vector<double>> moment(grid.size(), std::vector<double>(nz, 0.0));
  std::vector<double> initial(nz, 0.0);
  const SiteIndex sites[] = {x};
  for (const DbmPath& p : paths) {
    const SpectralPath sp = SpectralPath::compute(base, p, sites);
    const std::vector<FlowTrajectory> trajs = integrate_characteristics(sp, z, options);
    for (std::size_t j = 0; j < nz; ++j) {
      const FlowTrajectory& tr = trajs[j];
      std::size_t stop = tr.active_until();
      if (tr.integral_stopped_at) stop = std::min(stop, *tr.integral_stopped_at);
      initial[j] = std::abs(sp.local_green(0.0, x, z[j].z()).imag());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto it = std::lower_bound(tr.times.begin(), tr.times.end(), grid[k] * (1.0 - 1e-12));
        const auto idx = std::min(static_cast<std::size_t>(it - tr.times.begin()), stop);
        const double im = std::abs(sp.local_green(tr.times[idx], x, tr.gamma[idx]).imag());
        moment[k][j] += std::pow(im, q) / static_cast<double>(paths.size());
      }
    }
  }

  GreenMomentReport rep;
  rep.times = grid;
  const double scale = std::sqrt(static_cast<double>(base.dim()) * options.eta_floor);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double worst = 0.0;
    for (std::size_t j = 0; j < nz; ++j) worst = std::max(worst, moment[k][j] / std::pow(initial[j], q));
    rep.ratio.push_back(worst);
    if (worst > 1.0) rep.fitted_c = std::max(rep.fitted_c, (1.0 - std::pow(worst, -1.0 / q)) * scale / q);
  }
  if (grid.size() >= 2) {
    double mt = 0.0, mr = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      mt += grid[k];
      mr += rep.ratio[k];
    }
    mt /= static_cast<double>(grid.size());
    mr /= static_cast<double>(grid.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      sxy += (grid[k] - mt) * (rep.ratio[k] - mr);
      sxx += (grid[k] - mt) * (grid[k] - mt);
    }
    rep.trend_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  return rep;
}

void write_trajectory_csv(std::ostream& out, const FlowTrajectory& trajectory) {
  out << "t,re_gamma,im_gamma,re_s,im_s,stopped,integral_stopped\n";
  out.precision(17);
  for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
    const bool stopped = trajectory.stopped_at && k >= *trajectory.stopped_at;
    const bool istop = trajectory.integral_stopped_at && k >= *trajectory.integral_stopped_at;
    out << trajectory.times[k] << ',' << trajectory.gamma[k].real() << ',' << trajectory.gamma[k].imag() << ','
        << trajectory.s_values[k].real() << ',' << trajectory.s_values[k].imag() << ',' << stopped << ',' << istop
        << '\n';
  }
}

}  // namespace ultrametric
