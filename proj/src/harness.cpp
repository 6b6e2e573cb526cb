// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/harness.hpp"

#include "ultrametric/error.hpp"
#include "ultrametric/flow.hpp"
#include "ultrametric/spectral.hpp"
#include "ultrametric/statistics.hpp"

#include <omp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

namespace ultrametric {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kInlineLimit = std::size_t{1} << 14;
constexpr std::uint64_t kFlowTag = std::uint64_t{1} << 20;

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

template <typename T>
std::vector<T> scalar_or_list(const json& v) {
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

}  // namespace

std::string to_string(Observable o) {
  switch (o) {
    case Observable::spectrum: return "spectrum";
    case Observable::vectors: return "vectors";
    case Observable::green: return "green";
    case Observable::flow: return "flow";
    case Observable::stats: return "stats";
  }
  return "?";
}

Observable parse_observable(const std::string& s) {
  for (Observable o : {Observable::spectrum, Observable::vectors, Observable::green, Observable::flow,
                       Observable::stats})
    if (to_string(o) == s) return o;
  throw ConfigError("unknown observable '" + s + "' (expected spectrum, vectors, green, flow, stats)");
}

std::set<Observable> parse_observables(const std::string& s) {
  std::set<Observable> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(parse_observable(item));
  return out;
}

std::string to_string(Model m) { return m == Model::goe ? "goe" : "ultrametric"; }

Model parse_model(const std::string& s) {
  if (s == "ultrametric") return Model::ultrametric;
  if (s == "goe") return Model::goe;
  throw ConfigError("unknown model '" + s + "' (expected ultrametric or goe)");
}

void ExperimentConfig::validate() const {
  std::vector<std::string> errors;
  if (epsilons.empty()) errors.push_back("epsilon list is empty");
  if (levels.empty()) errors.push_back("n list is empty");
  for (double e : epsilons) {
    if (!std::isfinite(e)) errors.push_back("epsilon must be finite");
    else if (model == Model::ultrametric && normalization == Normalization::raw && e <= -1.0)
      errors.push_back("epsilon = " + shortest(e) + " needs mean_field normalization (raw requires epsilon > -1)");
  }
  const bool full_vectors = wants(Observable::vectors) || wants(Observable::green);
  for (int n : levels) {
    if (n < 2 || n > kDefaultMaxLevel)
      errors.push_back("n = " + std::to_string(n) + " outside [2, " + std::to_string(kDefaultMaxLevel) + "]");
    else if (full_vectors && n > 12)
      errors.push_back("n = " + std::to_string(n) + " exceeds 12, the ceiling for eigenvector observables");
    if (wants(Observable::green) && n >= 2) {
      const double eta = std::pow(static_cast<double>(volume(n)), -1.0 + alpha);
      if (eta * std::pow(10.0, holder_min_decades) > holder_eta_max)
        errors.push_back("green at n = " + std::to_string(n) + ": eta grid [" + shortest(eta) + ", " +
                         shortest(holder_eta_max) + "] spans fewer than " + shortest(holder_min_decades) +
                         " decades");
    }
  }
  if (realizations < 1) errors.push_back("reps must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) errors.push_back("alpha must lie in (0, 1)");
  if (observables.empty()) errors.push_back("no observables requested");
  if (!(window_quantile > 0.0 && window_quantile < 0.5)) errors.push_back("window_quantile must lie in (0, 0.5)");
  if (output_dir.empty()) errors.push_back("out must be set");
  if (!(holder_eta_max > 0.0)) errors.push_back("holder_eta_max must be positive");
  if (!(holder_min_decades > 0.0)) errors.push_back("holder_min_decades must be positive");
  if (holder_energies < 1) errors.push_back("holder_energies must be >= 1");
  if (!(max_failure_fraction >= 0.0 && max_failure_fraction <= 1.0))
    errors.push_back("max_failure_fraction must lie in [0, 1]");
  if (wants(Observable::flow)) {
    if (!alpha_tilde) {
      errors.push_back("flow needs alpha_tilde");
    } else {
      const double at = *alpha_tilde;
      if (!(at > 0.5)) errors.push_back("alpha_tilde = " + shortest(at) + " must exceed 1/2");
      if (!(at > alpha)) errors.push_back("alpha_tilde must exceed alpha (the coarse scale is coarser)");
      if (!(at < 1.0)) errors.push_back("alpha_tilde must be < 1");
      for (double e : epsilons)
        if (!(at < -e))
          errors.push_back("alpha_tilde = " + shortest(at) + " must be < -epsilon = " + shortest(-e));
    }
    if (model == Model::ultrametric && normalization != Normalization::raw)
      errors.push_back("flow needs raw normalization");
    if (flow.path_intervals < 1) errors.push_back("flow.path_intervals must be >= 1");
    if (flow.energies < 2 || flow.heights < 2) errors.push_back("flow grid needs >= 2 energies and heights");
    if (!(flow.coverage > 0.0 && flow.coverage <= 1.0)) errors.push_back("flow.coverage must lie in (0, 1]");
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
}

json ExperimentConfig::to_json() const {
  json obs = json::array();
  for (Observable o : observables) obs.push_back(to_string(o));
  return json{{"epsilon", epsilons},
              {"n", levels},
              {"reps", realizations},
              {"alpha", alpha},
              {"alpha_tilde", alpha_tilde ? json(*alpha_tilde) : json(nullptr)},
              {"observables", obs},
              {"seed", master_seed},
              {"model", to_string(model)},
              {"normalization", to_string(normalization)},
              {"window_quantile", window_quantile},
              {"holder_eta_max", holder_eta_max},
              {"holder_min_decades", holder_min_decades},
              {"holder_energies", holder_energies},
              {"flow",
               {{"path_intervals", flow.path_intervals},
                {"energies", flow.energies},
                {"heights", flow.heights},
                {"coverage", flow.coverage},
                {"invariance_c", flow.invariance_c}}},
              {"memory_budget_mb", memory_budget_mb},
              {"max_failure_fraction", max_failure_fraction}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  std::vector<std::string> errors;
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "epsilon") c.epsilons = scalar_or_list<double>(v);
      else if (key == "n") c.levels = scalar_or_list<int>(v);
      else if (key == "reps") c.realizations = v.get<std::size_t>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "alpha_tilde") c.alpha_tilde = v.is_null() ? std::nullopt : std::optional(v.get<double>());
      else if (key == "seed") c.master_seed = v.get<std::uint64_t>();
      else if (key == "out") c.output_dir = v.get<std::string>();
      else if (key == "observables") {
        c.observables.clear();
        if (v.is_string()) c.observables = parse_observables(v.get<std::string>());
        else
          for (const auto& o : v) c.observables.insert(parse_observable(o.get<std::string>()));
      } else if (key == "window_quantile") c.window_quantile = v.get<double>();
      else if (key == "model") c.model = parse_model(v.get<std::string>());
      else if (key == "normalization") c.normalization = parse_normalization(v.get<std::string>());
      else if (key == "holder_eta_max") c.holder_eta_max = v.get<double>();
      else if (key == "holder_min_decades") c.holder_min_decades = v.get<double>();
      else if (key == "holder_energies") c.holder_energies = v.get<std::size_t>();
      else if (key == "memory_budget_mb") c.memory_budget_mb = v.get<std::size_t>();
      else if (key == "max_failure_fraction") c.max_failure_fraction = v.get<double>();
      else if (key == "flow") {
        for (const auto& [fk, fv] : v.items()) {
          if (fk == "path_intervals") c.flow.path_intervals = fv.get<std::size_t>();
          else if (fk == "energies") c.flow.energies = fv.get<std::size_t>();
          else if (fk == "heights") c.flow.heights = fv.get<std::size_t>();
          else if (fk == "coverage") c.flow.coverage = fv.get<double>();
          else if (fk == "invariance_c") c.flow.invariance_c = fv.get<double>();
          else errors.push_back("unknown key flow." + fk);
        }
      } else {
        errors.push_back("unknown key " + key);
      }
    } catch (const json::exception& e) {
      errors.push_back("bad value for " + key + ": " + e.what());
    } catch (const std::exception& e) {
      errors.push_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) { return from_json(read_json(path)); }

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::string Cell::id() const {
  return "eps" + shortest(epsilon) + "_n" + std::to_string(n) + "_r" + std::to_string(realization);
}

std::vector<Cell> enumerate_cells(const ExperimentConfig& config) {
  const RandomStream root(config.master_seed);
  std::vector<Cell> cells;
  for (double e : config.epsilons)
    for (int n : config.levels)
      for (std::size_t r = 0; r < config.realizations; ++r)
        cells.push_back({e, n, r,
                         root.substream(std::bit_cast<std::uint64_t>(e), static_cast<std::uint64_t>(n), r).key()});
  return cells;
}

json ResultRow::to_json() const {
  return json{{"experiment", experiment}, {"epsilon", epsilon},       {"n", n},
              {"seed", seed},             {"realization", realization}, {"observable", observable},
              {"payload", payload}};
}

ResultRow ResultRow::from_json(const json& j) {
  ResultRow r;
  r.experiment = j.at("experiment").get<std::string>();
  r.epsilon = j.at("epsilon").get<double>();
  r.n = j.at("n").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.realization = j.at("realization").get<std::size_t>();
  r.observable = j.at("observable").get<std::string>();
  r.payload = j.at("payload");
  return r;
}

namespace {

class RowSink {
 public:
  RowSink(const ExperimentConfig& config, const Cell& cell, const fs::path& cell_dir)
      : experiment_(config.hash()), cell_(cell), dir_(cell_dir) {}

  void scalar(const std::string& name, double v) { push(name, v); }

  void array(const std::string& name, const std::vector<double>& v) {
    if (v.size() <= kInlineLimit) {
      push(name, v);
      return;
    }
    const std::string file = cell_.id() + "." + name + ".bin";
    std::string bytes(v.size() * sizeof(double), '\0');
    std::memcpy(bytes.data(), v.data(), bytes.size());
    write_atomic(dir_ / file, bytes);
    push(name, json{{"file", "cells/" + file}, {"count", v.size()}});
  }

  std::vector<ResultRow> take() { return std::move(rows_); }

 private:
  void push(const std::string& name, json payload) {
    rows_.push_back({experiment_, cell_.epsilon, cell_.n, cell_.seed, cell_.realization, name, std::move(payload)});
  }

  std::string experiment_;
  Cell cell_;
  fs::path dir_;
  std::vector<ResultRow> rows_;
};

void green_rows(const ExperimentConfig& config, const SpectralDecomposition& dec, const SpectralWindow& window,
                RowSink& sink) {
  const std::size_t dim = dec.dim;
  const std::vector<double> etas =
      geometric_eta_grid(std::pow(static_cast<double>(dim), -1.0 + config.alpha), config.holder_eta_max);
  std::vector<std::size_t> inside;
  for (std::size_t k = 0; k < dim; ++k)
    if (window.contains(dec.eigenvalues[k])) inside.push_back(k);
  const std::size_t count = std::min(config.holder_energies, inside.size());
  std::vector<double> slopes;
  std::vector<double> mean_curve(etas.size(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = inside[(2 * i + 1) * inside.size() / (2 * count)];
    const auto col = dec.eigenvectors->col(static_cast<Eigen::Index>(k));
    Eigen::Index peak = 0;
    col.cwiseAbs().maxCoeff(&peak);
    const SiteIndex x = SiteIndex::from_offset(static_cast<std::size_t>(peak));
    std::vector<double> im;
    for (double eta : etas) im.push_back(local_green(dec, x, ComplexEnergy(dec.eigenvalues[k], eta)).imag());
    slopes.push_back(holder_slope(etas, im, config.holder_min_decades));
    for (std::size_t j = 0; j < etas.size(); ++j) mean_curve[j] += 2.0 * etas[j] * im[j] / static_cast<double>(count);
  }
  double mean = 0.0;
  for (double s : slopes) mean += s / static_cast<double>(slopes.size());
  sink.array("holder.etas", etas);
  sink.array("holder.curve", mean_curve);
  sink.array("holder.slopes", slopes);
  sink.scalar("holder.slope", mean);

  const LocalLawReport law =
      local_law_check(dec, window, config.alpha, 0.0, std::numeric_limits<double>::infinity());
  sink.scalar("local_law.min_im", law.min_im);
  sink.scalar("local_law.max_abs_over_log", law.max_abs_over_log);
}

void flow_rows(const ExperimentConfig& config, const Cell& cell, const SymmetricMatrix& base,
               const RandomStream& stream, RowSink& sink) {
  const std::size_t dim = base.dim();
  const double horizon = coupling_weight(Level(cell.n), cell.epsilon);
  const DbmPath path =
      sample_dbm_path(dim, uniform_times(horizon, config.flow.path_intervals), stream.substream(kFlowTag));
  const SpectralPath spath = SpectralPath::compute(base, path);
  const FlowDomain fine =
      FlowDomain::at_scale(bulk_window(spath.eigenvalues(0), config.window_quantile), dim, config.alpha);
  const SpectralWindow wide = bulk_window(spath.eigenvalues(0), config.window_quantile / 2.0);

  FlowDomain coarse = FlowDomain::at_scale(wide, dim, *config.alpha_tilde);
  const FlowConstants k0 = measure_flow_constants(spath, coarse, fine, config.flow.energies, config.flow.heights);
  coarse.eta_high = 10.0 + 2.0 * k0.k_upper * horizon * std::log(static_cast<double>(dim));
  const FlowConstants k = measure_flow_constants(spath, coarse, fine, config.flow.energies, config.flow.heights);

  FlowOptions opt;
  opt.eta_floor = fine.eta_low;
  opt.k_lower = k.k_lower;
  const std::vector<ComplexEnergy> grid = fine.grid(config.flow.energies, config.flow.heights);
  const std::vector<FlowTrajectory> trajs = integrate_characteristics(spath, grid, opt, Execution::serial);
  double max_residual = 0.0;
  double stopped = 0.0;
  for (const FlowTrajectory& t : trajs) {
    max_residual = std::max(max_residual, t.residual);
    if (t.stopped_at) stopped += 1.0;
  }
  sink.scalar("flow.horizon", horizon);
  sink.scalar("flow.k_lower", k.k_lower);
  sink.scalar("flow.k_upper", k.k_upper);
  sink.scalar("flow.max_residual", max_residual);
  sink.scalar("flow.stopped", stopped);
  sink.scalar("flow.coverage_constant", coverage_constant(trajs, dim, fine.eta_low, config.flow.coverage));
  sink.scalar("flow.fraction_in_event",
              invariance_event_check(trajs, config.flow.invariance_c, dim, fine.eta_low));

  PropagationOptions popt;
  popt.n_energy = config.flow.energies;
  popt.n_eta = config.flow.heights;
  popt.enforce_compatibility = false;
  const PropagationReport rep = propagate_bound(spath, coarse, fine, horizon, k.k_lower, k.k_upper, popt);
  sink.scalar("flow.reachability", rep.reachability);
  sink.scalar("flow.min_im_s_T", rep.min_im_s);
  sink.scalar("flow.roundtrip_error", rep.roundtrip_error);
  sink.scalar("flow.compatible", rep.compat.satisfied() ? 1.0 : 0.0);
}

}  // namespace

std::vector<ResultRow> run_cell(const ExperimentConfig& config, const Cell& cell, const fs::path& cell_dir) {
  const RandomStream stream(cell.seed);
  EnsembleParams params;
  params.epsilon = cell.epsilon;
  params.n = cell.n;
  params.normalization = config.normalization;
  params.seed = cell.seed;
  const std::size_t dim = volume(cell.n);

  RowSink sink(config, cell, cell_dir);
  const bool vectors = config.wants(Observable::vectors) || config.wants(Observable::green);
  const bool needs_h = config.wants(Observable::spectrum) || config.wants(Observable::stats) || vectors;

  if (needs_h) {
    const SymmetricMatrix h =
        config.model == Model::goe ? sample_goe(dim, stream.substream(0)) : sample_direct(params, stream);
    const SpectralDecomposition dec = eig_sym(h, vectors);
    const SpectralWindow window = bulk_window(dec, config.window_quantile);
    if (config.wants(Observable::spectrum)) {
      sink.array("eigenvalues", dec.eigenvalues);
      sink.array("bulk_window", {window.lo(), window.hi()});
    }
    if (config.wants(Observable::stats)) {
      const GapRatios r = gap_ratios(dec.eigenvalues, window);
      sink.array("gap_ratio.values", r.values);
      sink.scalar("gap_ratio.mean", r.mean);
      sink.scalar("gap_ratio.degenerate", static_cast<double>(r.degenerate));
    }
    if (config.wants(Observable::vectors)) {
      const ProfileSet profiles = eigenvector_profiles(dec, window);
      std::vector<double> sup, ipr;
      for (const EigenvectorProfile& p : profiles.records) {
        sup.push_back(static_cast<double>(dim) * p.sup_norm * p.sup_norm);
        ipr.push_back(p.ipr);
      }
      sink.array("sup_norm_sq", sup);
      sink.array("ipr", ipr);
    }
    if (config.wants(Observable::green)) green_rows(config, dec, window, sink);
  }

  if (config.wants(Observable::flow)) {
    const SymmetricMatrix base = config.model == Model::goe
                                     ? sample_goe(dim, stream.substream(0))
                                     : sample_layers(params, stream, 0, cell.n);
    flow_rows(config, cell, base, stream, sink);
  }
  return sink.take();
}

bool RunSummary::within_threshold(double max_failure_fraction) const {
  if (cells == 0) return true;
  return static_cast<double>(failures.size()) <= max_failure_fraction * static_cast<double>(cells);
}

RunSummary run(const ExperimentConfig& config) {
  config.validate();
  const fs::path out = config.output_dir;
  const fs::path cell_dir = out / "cells";
  fs::create_directories(cell_dir);
  const fs::path manifest_path = out / "manifest.json";
  const std::string hash = config.hash();
  const std::vector<Cell> cells = enumerate_cells(config);

  json completed = json::object();
  if (fs::exists(manifest_path)) {
    const json old = read_json(manifest_path);
    if (old.value("config_hash", std::string()) != hash)
      throw ConfigError("output directory " + out.string() + " holds results of a different configuration");
    completed = old.value("completed", json::object());
  }

  json cell_list = json::array();
  for (const Cell& c : cells) cell_list.push_back({{"id", c.id()}, {"seed", c.seed}});

  RunSummary summary;
  summary.cells = cells.size();
  std::vector<Cell> todo;
  for (const Cell& c : cells) {
    if (completed.contains(c.id()) && fs::exists(cell_dir / (c.id() + ".ndjson"))) ++summary.resumed;
    else todo.push_back(c);
  }

  auto write_manifest = [&]() {
    json failures = json::array();
    for (const CellFailure& f : summary.failures) failures.push_back({{"cell", f.cell}, {"message", f.message}});
    json m{{"version", kVersion}, {"config_hash", hash},    {"config", config.to_json()}, {"cells", cell_list},
           {"completed", completed}, {"failures", failures}, {"updated", utc_now()}};
    write_atomic(manifest_path, m.dump(2) + "\n");
  };
  write_manifest();

  const std::size_t max_dim = volume(*std::max_element(config.levels.begin(), config.levels.end()));
  const bool vectors = config.wants(Observable::vectors) || config.wants(Observable::green);
  const double cell_bytes = static_cast<double>(max_dim) * static_cast<double>(max_dim) * 8.0 * (vectors ? 3.0 : 2.0);
  const double budget = static_cast<double>(config.memory_budget_mb) * 1024.0 * 1024.0;
  const int cap = static_cast<int>(std::max(1.0, std::floor(budget / cell_bytes)));
  const int threads = std::max(1, std::min(cap, omp_get_max_threads()));

  const auto n = static_cast<std::ptrdiff_t>(todo.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Cell& c = todo[static_cast<std::size_t>(i)];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const std::vector<ResultRow> rows = run_cell(config, c, cell_dir);
      std::string text;
      for (const ResultRow& r : rows) text += r.to_json().dump() + "\n";
      write_atomic(cell_dir / (c.id() + ".ndjson"), text);
      const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
#pragma omp critical(ultrametric_manifest)
      {
        completed[c.id()] = {{"seed", c.seed}, {"wall_seconds", wall}};
        ++summary.computed;
        write_manifest();
      }
    } catch (const std::exception& e) {
#pragma omp critical(ultrametric_manifest)
      {
        std::cerr << "cell " << c.id() << " failed: " << e.what() << '\n';
        summary.failures.push_back({c.id(), e.what()});
        try {
          write_manifest();
        } catch (const std::exception& me) {
          std::cerr << "manifest update failed: " << me.what() << '\n';
        }
      }
    }
  }
  std::sort(summary.failures.begin(), summary.failures.end(),
            [](const CellFailure& a, const CellFailure& b) { return a.cell < b.cell; });
  write_manifest();

  std::string ndjson;
  std::string csv = "experiment,epsilon,n,seed,realization,observable,index,value\n";
  for (const Cell& c : cells) {
    if (!completed.contains(c.id())) continue;
    std::ifstream in(cell_dir / (c.id() + ".ndjson"));
    std::string line;
    while (std::getline(in, line)) {
      ndjson += line + "\n";
      const ResultRow r = ResultRow::from_json(json::parse(line));
      const std::string prefix = r.experiment + "," + shortest(r.epsilon) + "," + std::to_string(r.n) + "," +
                                 std::to_string(r.seed) + "," + std::to_string(r.realization) + "," + r.observable +
                                 ",";
      if (r.payload.is_array()) {
        for (std::size_t k = 0; k < r.payload.size(); ++k)
          csv += prefix + std::to_string(k) + "," + r.payload[k].dump() + "\n";
      } else if (r.payload.is_object()) {
        csv += prefix + "," + r.payload.at("file").get<std::string>() + "\n";
      } else {
        csv += prefix + "0," + r.payload.dump() + "\n";
      }
    }
  }
  write_atomic(out / "results.ndjson", ndjson);
  write_atomic(out / "results.csv", csv);
  return summary;
}

std::vector<ResultRow> read_rows(const fs::path& results_ndjson) {
  std::ifstream in(results_ndjson);
  if (!in) throw ConfigError("cannot read " + results_ndjson.string());
  std::vector<ResultRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      rows.push_back(ResultRow::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ConfigError(results_ndjson.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

namespace {

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

}  // namespace

StatsSummary aggregate(const std::vector<ResultRow>& rows) {
  struct Acc {
    std::set<std::size_t> reps;
    std::vector<double> ratios, sup, holder, min_im, max_abs, coverage, reach;
    double degenerate = 0.0;
  };
  std::map<std::pair<double, int>, Acc> groups;
  for (const ResultRow& r : rows) {
    Acc& a = groups[{r.epsilon, r.n}];
    a.reps.insert(r.realization);
    auto extend = [&](std::vector<double>& dst) {
      if (r.payload.is_array())
        for (const auto& v : r.payload) dst.push_back(v.get<double>());
    };
    if (r.observable == "gap_ratio.values") extend(a.ratios);
    else if (r.observable == "gap_ratio.degenerate") a.degenerate += r.payload.get<double>();
    else if (r.observable == "sup_norm_sq") extend(a.sup);
    else if (r.observable == "holder.slope") a.holder.push_back(r.payload.get<double>());
    else if (r.observable == "local_law.min_im") a.min_im.push_back(r.payload.get<double>());
    else if (r.observable == "local_law.max_abs_over_log") a.max_abs.push_back(r.payload.get<double>());
    else if (r.observable == "flow.coverage_constant") a.coverage.push_back(r.payload.get<double>());
    else if (r.observable == "flow.reachability") a.reach.push_back(r.payload.get<double>());
  }

  StatsSummary s;
  std::map<double, std::pair<std::vector<std::vector<double>>, std::vector<int>>> by_eps;
  for (const auto& [key, a] : groups) {
    GroupSummary g;
    g.epsilon = key.first;
    g.n = key.second;
    g.realizations = a.reps.size();
    g.degenerate_gaps = static_cast<std::size_t>(a.degenerate);
    if (!a.ratios.empty()) {
      double m = 0.0;
      for (double v : a.ratios) m += v;
      m /= static_cast<double>(a.ratios.size());
      double var = 0.0;
      for (double v : a.ratios) var += (v - m) * (v - m);
      g.gap_ratio_mean = m;
      if (a.ratios.size() > 1)
        g.gap_ratio_se = std::sqrt(var / static_cast<double>(a.ratios.size() - 1) / static_cast<double>(a.ratios.size()));
    }
    if (!a.sup.empty()) {
      g.sup_norm_q90 = quantile(a.sup, 0.9);
      by_eps[key.first].first.push_back(a.sup);
      by_eps[key.first].second.push_back(key.second);
    }
    if (!a.holder.empty()) {
      double m = 0.0;
      for (double v : a.holder) m += v / static_cast<double>(a.holder.size());
      g.holder_slope = m;
    }
    if (!a.min_im.empty()) g.local_law_min_im = median(a.min_im);
    if (!a.max_abs.empty()) g.local_law_max_abs_over_log = median(a.max_abs);
    if (!a.coverage.empty()) g.flow_coverage_constant = median(a.coverage);
    if (!a.reach.empty()) {
      double m = 0.0;
      for (double v : a.reach) m += v / static_cast<double>(a.reach.size());
      g.flow_reachability = m;
    }
    s.groups.push_back(std::move(g));
  }
  for (const auto& [eps, data] : by_eps) {
    EpsilonSummary e;
    e.epsilon = eps;
    std::set<int> distinct(data.second.begin(), data.second.end());
    if (distinct.size() >= 3) e.domination_slope = domination_exponent(data.first, data.second, 0.9);
    s.fits.push_back(e);
  }
  return s;
}

json StatsSummary::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json g = json::array();
  for (const GroupSummary& x : groups)
    g.push_back({{"epsilon", x.epsilon},
                 {"n", x.n},
                 {"realizations", x.realizations},
                 {"gap_ratio_mean", opt(x.gap_ratio_mean)},
                 {"gap_ratio_se", opt(x.gap_ratio_se)},
                 {"degenerate_gaps", x.degenerate_gaps},
                 {"sup_norm_q90", opt(x.sup_norm_q90)},
                 {"holder_slope", opt(x.holder_slope)},
                 {"local_law_min_im", opt(x.local_law_min_im)},
                 {"local_law_max_abs_over_log", opt(x.local_law_max_abs_over_log)},
                 {"flow_coverage_constant", opt(x.flow_coverage_constant)},
                 {"flow_reachability", opt(x.flow_reachability)}});
  json f = json::array();
  for (const EpsilonSummary& e : fits) f.push_back({{"epsilon", e.epsilon}, {"domination_slope", opt(e.domination_slope)}});
  return json{{"groups", g}, {"fits", f}};
}

}  // namespace ultrametric
