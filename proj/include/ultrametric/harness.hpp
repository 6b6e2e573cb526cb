// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Experiment orchestration. A run is a grid of cells (epsilon, n, realization);
// every cell draws from its own seed derived from the master seed and the cell
// coordinates, writes its rows to cells/<id>.ndjson, and is recorded in
// manifest.json once complete. Layout of an output directory:
//
//   manifest.json     config, config hash, version, per-cell seeds, wall times
//   cells/            one ndjson file per completed cell (+ .bin payloads)
//   results.ndjson    all rows in canonical cell order
//   results.csv       the same rows flattened, one value per line

#pragma once

#include "ultrametric/ensemble.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ultrametric {

inline constexpr const char* kVersion = "0.1.0";

enum class Observable { spectrum, vectors, green, flow, stats };
std::string to_string(Observable o);
Observable parse_observable(const std::string& s);
// Comma separated list, e.g. "spectrum,stats".
std::set<Observable> parse_observables(const std::string& s);

enum class Model { ultrametric, goe };
std::string to_string(Model m);
Model parse_model(const std::string& s);

struct FlowSettings {
  std::size_t path_intervals = 16;  // eigendecompositions per path, minus one
  std::size_t energies = 10;
  std::size_t heights = 10;
  double coverage = 0.95;
  double invariance_c = 10.0;
};

struct ExperimentConfig {
  std::vector<double> epsilons{-0.75};
  std::vector<int> levels{8};
  std::size_t realizations = 1;
  double alpha = 0.5;
  std::optional<double> alpha_tilde;
  std::set<Observable> observables{Observable::spectrum};
  std::filesystem::path output_dir = "results";
  std::uint64_t master_seed = 0;
  Model model = Model::ultrametric;
  Normalization normalization = Normalization::raw;
  double window_quantile = 0.25;
  double holder_eta_max = 0.1;
  double holder_min_decades = 0.75;
  std::size_t holder_energies = 20;
  FlowSettings flow;
  std::size_t memory_budget_mb = 2048;
  double max_failure_fraction = 0.0;

  // Throws ConfigError listing every violated constraint, one per line.
  void validate() const;
  [[nodiscard]] bool wants(Observable o) const { return observables.count(o) > 0; }

  // Everything except output_dir, in a fixed key order.
  [[nodiscard]] nlohmann::json to_json() const;
  // Keys mirror the CLI flags (epsilon, n, reps, alpha, alpha_tilde, seed,
  // out, observables, window_quantile) plus the fields above. Unknown keys
  // are rejected.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  // Hex FNV-1a 64 of to_json().dump().
  [[nodiscard]] std::string hash() const;
};

struct Cell {
  double epsilon;
  int n;
  std::size_t realization;
  std::uint64_t seed;
  [[nodiscard]] std::string id() const;
};

// Canonical cell order: epsilon list order, then n list order, then
// realization.
std::vector<Cell> enumerate_cells(const ExperimentConfig& config);

struct ResultRow {
  std::string experiment;
  double epsilon = 0.0;
  int n = 0;
  std::uint64_t seed = 0;
  std::size_t realization = 0;
  std::string observable;
  nlohmann::json payload;  // number, array, or {"file": relative path}

  [[nodiscard]] nlohmann::json to_json() const;
  static ResultRow from_json(const nlohmann::json& j);
};

// Rows for a single cell. Throws NumericalError or PreconditionError on
// numerical failure.
std::vector<ResultRow> run_cell(const ExperimentConfig& config, const Cell& cell,
                                const std::filesystem::path& cell_dir);

struct CellFailure {
  std::string cell;
  std::string message;
};

struct RunSummary {
  std::size_t cells = 0;
  std::size_t computed = 0;
  std::size_t resumed = 0;
  std::vector<CellFailure> failures;
  [[nodiscard]] bool within_threshold(double max_failure_fraction) const;
};

// Runs every cell not yet recorded as complete in the manifest, then writes
// results.ndjson and results.csv. Throws ConfigError if the output directory
// holds a manifest for a different config.
RunSummary run(const ExperimentConfig& config);

std::vector<ResultRow> read_rows(const std::filesystem::path& results_ndjson);

// Per (epsilon, n) means and per-epsilon fits over a results file.
struct GroupSummary {
  double epsilon = 0.0;
  int n = 0;
  std::size_t realizations = 0;
  std::optional<double> gap_ratio_mean;
  std::optional<double> gap_ratio_se;
  std::size_t degenerate_gaps = 0;
  std::optional<double> sup_norm_q90;  // 0.9-quantile of N |psi|_inf^2
  std::optional<double> holder_slope;
  std::optional<double> local_law_min_im;
  std::optional<double> local_law_max_abs_over_log;
  std::optional<double> flow_coverage_constant;
  std::optional<double> flow_reachability;
};

struct EpsilonSummary {
  double epsilon = 0.0;
  std::optional<double> domination_slope;
};

struct StatsSummary {
  std::vector<GroupSummary> groups;
  std::vector<EpsilonSummary> fits;
  [[nodiscard]] nlohmann::json to_json() const;
};

StatsSummary aggregate(const std::vector<ResultRow>& rows);

}  // namespace ultrametric
