// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0
//
// ultrametric <subcommand> [flags]
//
//   sample    dump one sampled matrix in the ULTRAMX1 binary format
//   spectrum  one decomposition, rows printed as ndjson
//   flow      characteristic-flow experiments over the configured grid
//   stats     aggregate a results directory into summary.json
//   sweep     full grid run (resumable)
//   refs      regenerate GOE / Poisson reference statistics
//   plot      SVG + CSV figures from a results directory
//
// Exit codes: 0 success, 2 configuration error, 3 too many numerical failures.

#include "ultrametric/error.hpp"
#include "ultrametric/harness.hpp"
#include "ultrametric/plots.hpp"
#include "ultrametric/statistics.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace um = ultrametric;
namespace fs = std::filesystem;

namespace {

constexpr int kConfigExit = 2;
constexpr int kNumericalExit = 3;

struct Flags {
  std::vector<double> epsilon;
  std::vector<int> n;
  std::size_t reps = 0;
  double alpha = 0.0;
  double alpha_tilde = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string observables;
  double window_quantile = 0.0;
  std::string config;
  std::string model;
  std::string normalization;

  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    opts["epsilon"] = app->add_option("--epsilon", epsilon, "Decay exponent(s), comma separated")->delimiter(',');
    opts["n"] = app->add_option("--n", n, "Level(s), comma separated; dimension is 2^n")->delimiter(',');
    opts["reps"] = app->add_option("--reps", reps, "Realizations per (epsilon, n)");
    opts["alpha"] = app->add_option("--alpha", alpha, "Fine spectral scale exponent, eta = N^(-1+alpha)");
    opts["alpha_tilde"] = app->add_option("--alpha-tilde", alpha_tilde, "Coarse spectral scale exponent");
    opts["seed"] = app->add_option("--seed", seed, "Master seed");
    opts["out"] = app->add_option("--out", out, "Output path");
    opts["observables"] =
        app->add_option("--observables", observables, "Comma separated: spectrum,vectors,green,flow,stats");
    opts["window_quantile"] = app->add_option("--window-quantile", window_quantile, "Bulk window quantile q");
    opts["model"] = app->add_option("--model", model, "ultrametric or goe");
    opts["normalization"] = app->add_option("--normalization", normalization, "raw or mean_field");
    app->add_option("--config", config, "JSON config file; flags override it")->check(CLI::ExistingFile);
  }

  [[nodiscard]] bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  um::ExperimentConfig resolve() const {
    um::ExperimentConfig c = config.empty() ? um::ExperimentConfig{} : um::ExperimentConfig::load(config);
    if (given("epsilon")) c.epsilons = epsilon;
    if (given("n")) c.levels = n;
    if (given("reps")) c.realizations = reps;
    if (given("alpha")) c.alpha = alpha;
    if (given("alpha_tilde")) c.alpha_tilde = alpha_tilde;
    if (given("seed")) c.master_seed = seed;
    if (given("out")) c.output_dir = out;
    if (given("observables")) c.observables = um::parse_observables(observables);
    if (given("window_quantile")) c.window_quantile = window_quantile;
    if (given("model")) c.model = um::parse_model(model);
    if (given("normalization")) c.normalization = um::parse_normalization(normalization);
    return c;
  }
};

um::Cell first_cell(const um::ExperimentConfig& c) { return um::enumerate_cells(c).front(); }

int finish(const um::RunSummary& s, const um::ExperimentConfig& c) {
  std::cerr << s.cells << " cells: " << s.computed << " computed, " << s.resumed << " resumed, " << s.failures.size()
            << " failed\n";
  return s.within_threshold(c.max_failure_fraction) ? 0 : kNumericalExit;
}

void print_summary(const fs::path& dir) {
  const um::StatsSummary s = um::aggregate(um::read_rows(dir / "results.ndjson"));
  const nlohmann::json j = s.to_json();
  std::ofstream(dir / "summary.json") << j.dump(2) << '\n';
  std::cout << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ultrametric random matrix experiments"};
  app.require_subcommand(1);

  Flags f_sample, f_spectrum, f_flow, f_sweep, f_refs;
  auto* sample = app.add_subcommand("sample", "Dump one sampled matrix (binary, ULTRAMX1)");
  f_sample.attach(sample);
  auto* spectrum = app.add_subcommand("spectrum", "One decomposition and its observables as ndjson");
  f_spectrum.attach(spectrum);
  auto* flow = app.add_subcommand("flow", "Characteristic-flow experiments");
  f_flow.attach(flow);
  auto* sweep = app.add_subcommand("sweep", "Grid run over epsilon, n and realizations");
  f_sweep.attach(sweep);
  auto* refs = app.add_subcommand("refs", "Regenerate reference statistics");
  f_refs.attach(refs);
  std::size_t poisson_gaps = 1000000;
  refs->add_option("--poisson-gaps", poisson_gaps, "Exponential gaps for the Poisson reference");

  auto* stats = app.add_subcommand("stats", "Aggregate a results directory");
  std::string stats_dir;
  stats->add_option("dir", stats_dir, "Results directory")->required();

  auto* plot = app.add_subcommand("plot", "Emit a figure from a results directory");
  std::string plot_dir, plot_kind, plot_out, plot_refs;
  plot->add_option("dir", plot_dir, "Results directory")->required();
  plot->add_option("--kind", plot_kind, "dos, spacing, phase, flow or holder")->required();
  plot->add_option("--out", plot_out, "Figure directory (default: <dir>/plots)");
  plot->add_option("--refs", plot_refs, "Reference statistics JSON")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigExit;
  }

  try {
    if (*sample) {
      um::ExperimentConfig c = f_sample.resolve();
      if (!f_sample.given("out")) throw um::ConfigError("sample needs --out <file>");
      c.output_dir = ".";
      c.validate();
      const um::Cell cell = first_cell(c);
      um::EnsembleParams p;
      p.epsilon = cell.epsilon;
      p.n = cell.n;
      p.normalization = c.normalization;
      p.seed = cell.seed;
      const um::RandomStream stream(cell.seed);
      const um::SymmetricMatrix h = c.model == um::Model::goe ? um::sample_goe(p.dim(), stream.substream(0))
                                                              : um::sample_direct(p, stream);
      um::write_matrix(f_sample.out, h);
      return 0;
    }
    if (*spectrum) {
      um::ExperimentConfig c = f_spectrum.resolve();
      if (!f_spectrum.given("observables")) c.observables = {um::Observable::spectrum, um::Observable::stats};
      c.output_dir = f_spectrum.given("out") ? fs::path(f_spectrum.out) : fs::temp_directory_path();
      c.validate();
      fs::create_directories(c.output_dir);
      for (const um::ResultRow& r : um::run_cell(c, first_cell(c), c.output_dir))
        std::cout << r.to_json().dump() << '\n';
      return 0;
    }
    if (*flow) {
      um::ExperimentConfig c = f_flow.resolve();
      c.observables = {um::Observable::flow};
      if (!f_flow.given("out") && f_flow.config.empty()) c.output_dir = "flow-results";
      const um::RunSummary s = um::run(c);
      print_summary(c.output_dir);
      return finish(s, c);
    }
    if (*sweep) {
      const um::ExperimentConfig c = f_sweep.resolve();
      const um::RunSummary s = um::run(c);
      return finish(s, c);
    }
    if (*stats) {
      print_summary(stats_dir);
      return 0;
    }
    if (*refs) {
      um::ReferenceRequest req;
      req.seed = f_refs.given("seed") ? f_refs.seed : 0;
      if (f_refs.given("n")) {
        req.sizes.clear();
        for (int n : f_refs.n) {
          if (n < 3 || n > um::kDefaultMaxLevel) throw um::ConfigError("refs --n must lie in [3, 14]");
          req.sizes.push_back(um::volume(n));
        }
      }
      if (f_refs.given("reps")) req.samples = f_refs.reps;
      if (f_refs.given("window_quantile")) req.window_quantile = f_refs.window_quantile;
      req.poisson_gaps = poisson_gaps;
      const fs::path out = f_refs.given("out") ? fs::path(f_refs.out) : fs::path("references.json");
      const um::ReferenceStatistics r = um::generate_references(req);
      um::write_references(out, r);
      for (const um::GoeReference& g : r.goe)
        std::cout << "GOE N=" << g.dim << " mean r = " << g.mean_r << " +- " << g.mean_r_se
                  << "  KS(surmise) = " << g.ks_to_surmise << '\n';
      std::cout << "Poisson mean r = " << r.poisson.mean_r << " +- " << r.poisson.mean_r_se << '\n';
      return 0;
    }
    if (*plot) {
      const fs::path dir = plot_dir;
      const fs::path out = plot_out.empty() ? dir / "plots" : fs::path(plot_out);
      std::optional<fs::path> ref;
      if (!plot_refs.empty()) ref = plot_refs;
      const um::PlotFiles files = um::emit_plots(dir, um::parse_plot_kind(plot_kind), out, ref);
      std::cout << files.svg.string() << '\n' << files.csv.string() << '\n';
      return 0;
    }
  } catch (const um::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfigExit;
  } catch (const um::PreconditionError& e) {
    std::cerr << e.what() << '\n';
    return kConfigExit;
  } catch (const um::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
