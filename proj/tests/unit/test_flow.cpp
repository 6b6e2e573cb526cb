// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/error.hpp"
#include "ultrametric/flow.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

using namespace ultrametric;

namespace {

// One eigenvalue v frozen in time: gamma(t) = v + sqrt((z0 - v)^2 + 2t).
SpectralPath scalar_path(double v, double horizon) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = v;
  const DbmPath zero = DbmPath::zero(1, uniform_times(horizon, 4));
  const SiteIndex sites[] = {SiteIndex(1)};
  return SpectralPath::compute(SymmetricMatrix::from_dense(m), zero, sites);
}

Complex scalar_exact(double v, Complex z0, double t) {
  const Complex u = std::sqrt((z0 - v) * (z0 - v) + 2.0 * t);
  return v + (u.imag() >= 0.0 ? u : -u);
}

}  // namespace

TEST_CASE("scalar characteristic converges at first order") {
  const SpectralPath sp = scalar_path(0.3, 1.0);
  const ComplexEnergy z0(0.1, 2.0);
  FlowOptions opt;
  opt.eta_floor = 1.0;
  opt.steps = 1000;
  const FlowTrajectory a = integrate_characteristic(sp, z0, opt);
  opt.steps = 2000;
  const FlowTrajectory b = integrate_characteristic(sp, z0, opt);
  const Complex exact = scalar_exact(0.3, z0.z(), 1.0);
  const double ea = std::abs(a.gamma.back() - exact);
  const double eb = std::abs(b.gamma.back() - exact);
  CHECK(ea < 1e-3);
  CHECK(ea / eb == doctest::Approx(2.0).epsilon(0.1));
  CHECK(!a.stopped_at);
  CHECK(!a.blow_up);
  CHECK(a.times.back() == 1.0);
  CHECK(a.gamma.size() == 1001);

  const Complex s0 = 1.0 / (0.3 - z0.z());
  double residual = 0.0;
  for (std::size_t k = 0; k <= 1000; ++k) residual = std::max(residual, std::abs(1.0 / (0.3 - a.gamma[k]) - s0));
  CHECK(a.residual == doctest::Approx(residual));
  CHECK(default_flow_steps(1.0, 1.0) == 1000);
  CHECK(default_flow_steps(1.0, 0.01) == 100000);
  CHECK(default_flow_steps(0.0, 0.1) == 0);
}

TEST_CASE("stopping time and freezing") {
  const SpectralPath sp = scalar_path(0.0, 0.2);
  FlowOptions opt;
  opt.eta_floor = 0.5;
  const FlowTrajectory tr = integrate_characteristic(sp, ComplexEnergy(0.0, 0.5), opt);
  REQUIRE(tr.stopped_at);
  const std::size_t k = *tr.stopped_at;
  CHECK(tr.times[k] == doctest::Approx(0.09375).epsilon(0.02));
  CHECK(tr.gamma[k].imag() <= 0.25);
  CHECK(tr.gamma[k - 1].imag() > 0.25);
  for (std::size_t j = k; j < tr.gamma.size(); ++j) CHECK(tr.gamma[j] == tr.gamma[k]);
  CHECK(tr.active_until() == k);
}

TEST_CASE("integral stopping time is recorded without freezing by default") {
  const SpectralPath sp = scalar_path(0.0, 0.2);
  FlowOptions opt;
  opt.eta_floor = 0.5;
  opt.k_lower = 100.0;  // threshold 5 / (100 * 0.5) = 0.1
  const FlowTrajectory tr = integrate_characteristic(sp, ComplexEnergy(0.0, 1.0), opt);
  REQUIRE(tr.integral_stopped_at);
  CHECK(tr.times[*tr.integral_stopped_at] == doctest::Approx(0.1).epsilon(0.05));
  CHECK(tr.gamma.back() != tr.gamma[*tr.integral_stopped_at]);
  opt.freeze_at_integral_stop = true;
  const FlowTrajectory fr = integrate_characteristic(sp, ComplexEnergy(0.0, 1.0), opt);
  CHECK(fr.gamma.back() == fr.gamma[*fr.integral_stopped_at]);
}

TEST_CASE("a vanishing transform leaves the characteristic fixed") {
  const SpectralPath sp = SpectralPath::empty(1.0);
  FlowOptions opt;
  opt.eta_floor = 0.5;
  const FlowTrajectory tr = integrate_characteristic(sp, ComplexEnergy(0.2, 0.7), opt);
  for (const Complex& g : tr.gamma) CHECK(g == Complex(0.2, 0.7));
  CHECK(tr.residual == 0.0);
  CHECK_THROWS_AS(integrate_characteristic(sp, ComplexEnergy(0.2, 0.1), opt), PreconditionError);
  opt.steps = 5;
  CHECK_THROWS_AS(integrate_characteristic(sp, ComplexEnergy(0.2, 0.7), opt), PreconditionError);
}

TEST_CASE("Lipschitz bound on scalar characteristics") {
  const SpectralPath sp = scalar_path(0.0, 1.0);
  FlowOptions opt;
  opt.eta_floor = 1.0;
  const FlowTrajectory a = integrate_characteristic(sp, ComplexEnergy(0.0, 2.0), opt);
  const FlowTrajectory b = integrate_characteristic(sp, ComplexEnergy(0.5, 2.5), opt);
  CHECK(lipschitz_check(a, a) == 0.0);
  CHECK(lipschitz_check(a, b) <= 1e-9);
  opt.steps = 2000;
  const FlowTrajectory c = integrate_characteristic(sp, ComplexEnergy(0.0, 2.0), opt);
  CHECK_THROWS_AS(lipschitz_check(a, c), PreconditionError);
}

TEST_CASE("GOE path: serial and parallel trajectories agree") {
  const std::size_t dim = 32;
  const SymmetricMatrix base = sample_goe(dim, RandomStream(1));
  const DbmPath path = sample_dbm_path(dim, uniform_times(0.05, 4), RandomStream(2));
  const SpectralPath sp = SpectralPath::compute(base, path);
  std::vector<ComplexEnergy> z;
  for (int i = 0; i < 12; ++i) z.emplace_back(-1.0 + 0.2 * i, 0.3);
  FlowOptions opt;
  opt.eta_floor = 0.3;
  const auto a = integrate_characteristics(sp, z, opt, Execution::serial);
  const auto b = integrate_characteristics(sp, z, opt, Execution::parallel);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].gamma == b[i].gamma);
    CHECK(a[i].residual == b[i].residual);
  }
  CHECK(std::abs(sp.stieltjes(0.0, {0.0, 1.0}) - stieltjes(eig_sym(base, false), ComplexEnergy(0.0, 1.0))) < 1e-14);
  CHECK_THROWS_AS((void)sp.local_green(0.0, SiteIndex(1), {0.0, 1.0}), PreconditionError);

  const double f1 = invariance_event_check(a, 0.1, dim, 0.3);
  const double f2 = invariance_event_check(a, 1.0, dim, 0.3);
  const double f3 = invariance_event_check(a, 1e6, dim, 0.3);
  CHECK(f1 <= f2);
  CHECK(f2 <= f3);
  CHECK(f3 == 1.0);
  const double cc = coverage_constant(a, dim, 0.3, 1.0);
  CHECK(invariance_event_check(a, cc, dim, 0.3) == 1.0);
}

TEST_CASE("flow domain grid") {
  const FlowDomain d = FlowDomain::at_scale(SpectralWindow(-1.0, 1.0), 256, 0.5);
  CHECK(d.eta_low == doctest::Approx(1.0 / 16.0));
  const auto g = d.grid(3, 4);
  REQUIRE(g.size() == 12);
  CHECK(g.front().energy() == -1.0);
  CHECK(g.front().eta() == doctest::Approx(1.0 / 16.0));
  CHECK(g[3].eta() == 10.0);
  CHECK(g.back().energy() == 1.0);
  for (const auto& z : g) CHECK(d.contains(z.z()));
  CHECK(!d.contains({0.0, 11.0}));
  CHECK_THROWS_AS((void)d.grid(1, 4), PreconditionError);
}

TEST_CASE("propagation with zero horizon is the identity") {
  const SpectralPath sp = SpectralPath::compute(sample_goe(16, RandomStream(3)), DbmPath::zero(16, {0.0}));
  const FlowDomain fine = FlowDomain::at_scale(SpectralWindow(-0.5, 0.5), 16, 0.5);
  const FlowDomain coarse = FlowDomain::at_scale(SpectralWindow(-1.0, 1.0), 16, 0.25, 20.0);
  PropagationOptions opt;
  opt.enforce_compatibility = false;
  opt.n_energy = 4;
  opt.n_eta = 3;
  const PropagationReport r = propagate_bound(sp, coarse, fine, 0.0, 0.1, 1.0, opt);
  CHECK(r.points == 12);
  CHECK(r.reachability == 1.0);
  CHECK(r.roundtrip_error == 0.0);
  CHECK(r.min_im_s > 0.0);
  CHECK(!r.compat.satisfied());
  opt.enforce_compatibility = true;
  CHECK_THROWS_AS(propagate_bound(sp, coarse, fine, 0.0, 0.1, 1.0, opt), PreconditionError);
}

TEST_CASE("compatibility arithmetic") {
  const FlowDomain fine{SpectralWindow(-0.5, 0.5), 0.01, 10.0, 0.5};
  const FlowDomain coarse{SpectralWindow(-1.0, 1.0), 0.05, 12.0, 0.75};
  const Compatibility c = compatibility(coarse, fine, 1.0, 0.2, 0.05, 16);
  CHECK(c.t_k_lower == doctest::Approx(0.2));
  CHECK(c.two_eta == doctest::Approx(0.1));
  CHECK(c.drift == doctest::Approx(0.1 * std::log(16.0)));
  CHECK(c.margin == doctest::Approx(0.5));
  CHECK(c.satisfied());
  CHECK(!compatibility(coarse, fine, 1.0, 0.2, 0.1, 16).satisfied());
  CHECK(!compatibility(coarse, fine, 0.4, 0.2, 0.05, 16).satisfied());
}

TEST_CASE("scalar Green moment ratio") {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(1, 1);
  const std::vector<DbmPath> paths{DbmPath::zero(1, uniform_times(1.0, 4))};
  const ComplexEnergy z[] = {ComplexEnergy(0.0, 2.0)};
  FlowOptions opt;
  opt.eta_floor = 1.0;
  const GreenMomentReport r = green_moment_check(SymmetricMatrix::from_dense(m), paths, SiteIndex(1), z, 2, opt);
  REQUIRE(r.ratio.size() == 5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(r.ratio[k] == doctest::Approx(4.0 / (4.0 - 2.0 * r.times[k])).epsilon(2e-3));
  CHECK(r.finite());
  CHECK(r.trend_slope > 0.0);
  CHECK(r.fitted_c > 0.0);
  CHECK_THROWS_AS(green_moment_check(SymmetricMatrix::from_dense(m), paths, SiteIndex(1), z, 1, opt),
                  PreconditionError);
}

TEST_CASE("trajectory CSV") {
  const SpectralPath sp = scalar_path(0.0, 0.2);
  FlowOptions opt;
  opt.eta_floor = 0.5;
  const FlowTrajectory tr = integrate_characteristic(sp, ComplexEnergy(0.0, 0.5), opt);
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,re_gamma,im_gamma,re_s,im_s,stopped,integral_stopped");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == tr.gamma.size());
}
