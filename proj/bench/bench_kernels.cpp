// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference kernels against their OpenMP versions. Run with
// OMP_NUM_THREADS set to compare scaling; results are bit-identical.

#include "ultrametric/ensemble.hpp"
#include "ultrametric/flow.hpp"
#include "ultrametric/kernels.hpp"
#include "ultrametric/spectral.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <vector>

namespace um = ultrametric;

namespace {

std::vector<double> spectrum(std::size_t dim) {
  um::RandomStream s(7);
  std::vector<double> e(dim);
  for (double& x : e) x = 4.0 * s.uniform() - 2.0;
  std::sort(e.begin(), e.end());
  return e;
}

std::vector<um::Complex> z_batch(std::size_t count) {
  std::vector<um::Complex> z;
  for (std::size_t i = 0; i < count; ++i) z.emplace_back(-1.5 + 3.0 * i / count, 0.01 + 0.1 * (i % 7));
  return z;
}

template <void (*Kernel)(Eigen::MatrixXd&, std::size_t, double, const um::RandomStream&)>
void BM_add_goe_blocks(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const um::RandomStream stream(1);
  for (auto _ : state) {
    Kernel(m, dim / 4, 1.0, stream);
    benchmark::DoNotOptimize(m.data());
  }
}
BENCHMARK(BM_add_goe_blocks<um::kernels::serial::add_goe_blocks>)->Arg(1024)->Arg(2048)->Name("add_goe_blocks/serial");
BENCHMARK(BM_add_goe_blocks<um::kernels::parallel::add_goe_blocks>)->Arg(1024)->Arg(2048)->Name("add_goe_blocks/parallel");

template <void (*Kernel)(std::span<const double>, std::span<const um::Complex>, std::span<um::Complex>)>
void BM_resolvent_trace(benchmark::State& state) {
  const auto e = spectrum(static_cast<std::size_t>(state.range(0)));
  const auto z = z_batch(256);
  std::vector<um::Complex> out(z.size());
  for (auto _ : state) {
    Kernel(e, z, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_resolvent_trace<um::kernels::serial::resolvent_trace>)->Arg(2048)->Arg(4096)->Name("resolvent_trace/serial");
BENCHMARK(BM_resolvent_trace<um::kernels::parallel::resolvent_trace>)->Arg(2048)->Arg(4096)->Name("resolvent_trace/parallel");

template <void (*Kernel)(std::span<const double>, std::span<const double>, std::span<const um::Complex>,
                         std::span<um::Complex>)>
void BM_weighted_resolvent(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const auto e = spectrum(dim);
  const std::vector<double> w(dim, 1.0 / static_cast<double>(dim));
  const auto z = z_batch(256);
  std::vector<um::Complex> out(z.size());
  for (auto _ : state) {
    Kernel(e, w, z, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_weighted_resolvent<um::kernels::serial::weighted_resolvent>)->Arg(4096)->Name("weighted_resolvent/serial");
BENCHMARK(BM_weighted_resolvent<um::kernels::parallel::weighted_resolvent>)->Arg(4096)->Name("weighted_resolvent/parallel");

template <std::vector<um::FlowTrajectory> (*Kernel)(const um::SpectralPath&, std::span<const um::ComplexEnergy>,
                                                    const um::FlowOptions&)>
void BM_characteristics(benchmark::State& state) {
  const std::size_t dim = 256;
  const um::SymmetricMatrix base = um::sample_goe(dim, um::RandomStream(3));
  const um::DbmPath path = um::sample_dbm_path(dim, um::uniform_times(0.05, 4), um::RandomStream(4));
  const um::SpectralPath sp = um::SpectralPath::compute(base, path);
  std::vector<um::ComplexEnergy> z;
  for (int i = 0; i < 32; ++i) z.emplace_back(-1.0 + i / 16.0, 0.1);
  um::FlowOptions opt;
  opt.eta_floor = 0.1;
  for (auto _ : state) {
    auto trajs = Kernel(sp, z, opt);
    benchmark::DoNotOptimize(trajs.data());
  }
}
BENCHMARK(BM_characteristics<um::kernels::serial::integrate_characteristics>)->Name("characteristics/serial");
BENCHMARK(BM_characteristics<um::kernels::parallel::integrate_characteristics>)->Name("characteristics/parallel");

}  // namespace

BENCHMARK_MAIN();
