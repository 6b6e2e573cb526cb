// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/error.hpp"
#include "ultrametric/harness.hpp"
#include "ultrametric/plots.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace ultrametric;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("um_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small(const fs::path& out) {
  ExperimentConfig c;
  c.epsilons = {-0.75};
  c.levels = {3};
  c.realizations = 2;
  c.observables = {Observable::spectrum, Observable::stats};
  c.output_dir = out;
  c.master_seed = 42;
  return c;
}

std::string error_of(const ExperimentConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("validation lists every violation") {
  ExperimentConfig c;
  c.levels = {1, 13};
  c.observables = {Observable::vectors};
  c.alpha = 1.5;
  const std::string msg = error_of(c);
  CHECK(msg.find("n = 1 outside") != std::string::npos);
  CHECK(msg.find("n = 13 exceeds 12") != std::string::npos);
  CHECK(msg.find("alpha must lie") != std::string::npos);

  ExperimentConfig f;
  f.observables = {Observable::flow};
  CHECK(error_of(f).find("flow needs alpha_tilde") != std::string::npos);
  f.alpha_tilde = 0.8;
  CHECK(error_of(f).find("must be < -epsilon") != std::string::npos);
  f.alpha_tilde = 0.4;
  CHECK(error_of(f).find("must exceed 1/2") != std::string::npos);
  f.alpha_tilde = 0.6;
  CHECK(error_of(f).empty());

  ExperimentConfig raw;
  raw.epsilons = {-1.5};
  CHECK(error_of(raw).find("mean_field") != std::string::npos);
  raw.normalization = Normalization::mean_field;
  CHECK(error_of(raw).empty());

  ExperimentConfig g;
  g.observables = {Observable::green};
  g.levels = {4};  // eta = 1/4 leaves no room below holder_eta_max
  CHECK(error_of(g).find("decades") != std::string::npos);
}

TEST_CASE("config JSON round trip and unknown keys") {
  ExperimentConfig c = small("x");
  c.alpha_tilde = 0.6;
  c.flow.energies = 7;
  const ExperimentConfig d = ExperimentConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  CHECK(d.hash() == c.hash());
  c.master_seed = 43;
  CHECK(d.hash() != c.hash());
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json{{"epsilon", -0.5}, {"bogus", 1}}), ConfigError);
  const ExperimentConfig s = ExperimentConfig::from_json(nlohmann::json{{"epsilon", -0.5}, {"n", 5}});
  CHECK(s.epsilons == std::vector<double>{-0.5});
  CHECK(s.levels == std::vector<int>{5});
  CHECK(parse_observables("spectrum,flow").size() == 2);
  CHECK_THROWS_AS(parse_observables("spectrum,nope"), ConfigError);
}

TEST_CASE("cells have distinct reproducible seeds") {
  ExperimentConfig c = small("x");
  c.epsilons = {-0.75, -0.5};
  c.levels = {3, 4};
  const auto a = enumerate_cells(c);
  const auto b = enumerate_cells(c);
  REQUIRE(a.size() == 8);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    seeds.insert(a[i].seed);
  }
  CHECK(seeds.size() == 8);
  CHECK(a[0].id() == "eps-0.75_n3_r0");
}

TEST_CASE("run writes rows, reruns identically and resumes") {
  const fs::path out = scratch("run");
  const ExperimentConfig c = small(out);
  const RunSummary s = run(c);
  CHECK(s.cells == 2);
  CHECK(s.computed == 2);
  CHECK(s.failures.empty());
  const auto rows = read_rows(out / "results.ndjson");
  std::size_t eig_rows = 0;
  for (const ResultRow& r : rows)
    if (r.observable == "eigenvalues") {
      ++eig_rows;
      CHECK(r.payload.size() == 8);
      CHECK(r.experiment == c.hash());
    }
  CHECK(eig_rows == 2);
  const std::string first = slurp(out / "results.ndjson");
  const std::string first_csv = slurp(out / "results.csv");
  CHECK(first_csv.rfind("experiment,epsilon,n,seed,realization,observable,index,value\n", 0) == 0);

  const RunSummary again = run(c);
  CHECK(again.resumed == 2);
  CHECK(again.computed == 0);
  CHECK(slurp(out / "results.ndjson") == first);

  const fs::path fresh = scratch("run_fresh");
  ExperimentConfig c2 = c;
  c2.output_dir = fresh;
  run(c2);
  CHECK(slurp(fresh / "results.ndjson") == first);

  fs::remove(out / "cells" / (enumerate_cells(c)[1].id() + ".ndjson"));
  nlohmann::json m = nlohmann::json::parse(slurp(out / "manifest.json"));
  m["completed"].erase(enumerate_cells(c)[1].id());
  std::ofstream(out / "manifest.json") << m.dump();
  const RunSummary partial = run(c);
  CHECK(partial.resumed == 1);
  CHECK(partial.computed == 1);
  CHECK(slurp(out / "results.ndjson") == first);

  ExperimentConfig other = c;
  other.master_seed = 7;
  CHECK_THROWS_AS(run(other), ConfigError);

  const StatsSummary agg = aggregate(rows);
  REQUIRE(agg.groups.size() == 1);
  CHECK(agg.groups[0].realizations == 2);
  REQUIRE(agg.groups[0].gap_ratio_mean);
  CHECK(*agg.groups[0].gap_ratio_mean > 0.0);
  CHECK(*agg.groups[0].gap_ratio_mean < 1.0);
  CHECK(agg.to_json()["groups"].size() == 1);
  fs::remove_all(out);
  fs::remove_all(fresh);
}

TEST_CASE("plots") {
  const fs::path out = scratch("plots");
  ExperimentConfig c = small(out);
  c.model = Model::goe;
  c.levels = {5};
  run(c);
  const PlotFiles f = emit_plots(out, PlotKind::dos, out / "plots");
  CHECK(fs::exists(f.svg));
  CHECK(fs::exists(f.csv));
  CHECK(slurp(f.svg).find(c.hash()) != std::string::npos);
  CHECK(slurp(f.csv).find("# config_hash=" + c.hash()) != std::string::npos);
  CHECK_THROWS_AS(emit_plots(out, PlotKind::flow, out / "plots"), PreconditionError);

  const fs::path empty = scratch("plots_empty");
  fs::create_directories(empty);
  std::ofstream(empty / "results.ndjson").close();
  std::ofstream(empty / "manifest.json") << R"({"config_hash": "0", "config": {}})";
  CHECK_THROWS_AS(emit_plots(empty, PlotKind::dos, empty / "plots"), PreconditionError);
  CHECK_THROWS_AS(parse_plot_kind("pie"), ConfigError);
  fs::remove_all(out);
  fs::remove_all(empty);
}
