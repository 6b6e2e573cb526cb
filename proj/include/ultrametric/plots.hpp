// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// Static SVG figures from a results directory. Each figure is written next to
// a CSV sidecar holding exactly the plotted numbers; both carry the config
// hash of the run that produced them.

#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace ultrametric {

enum class PlotKind { dos, spacing, phase, flow, holder };
std::string to_string(PlotKind k);
PlotKind parse_plot_kind(const std::string& s);

struct PlotFiles {
  std::filesystem::path svg;
  std::filesystem::path csv;
};

// Reads results.ndjson and manifest.json from `results_dir`. A reference
// statistics file, when given, adds the GOE oracle to spacing and phase plots.
// Throws PreconditionError on an empty result set or when the observables the
// kind needs are missing.
PlotFiles emit_plots(const std::filesystem::path& results_dir, PlotKind kind, const std::filesystem::path& out_dir,
                     const std::optional<std::filesystem::path>& references = std::nullopt);

}  // namespace ultrametric
