// Copyright 2026 The Ultrametric Authors
// SPDX-License-Identifier: Apache-2.0

#include "ultrametric/plots.hpp"

#include "ultrametric/error.hpp"
#include "ultrametric/harness.hpp"
#include "ultrametric/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace ultrametric {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
  bool markers = false;
  bool dashed = false;
};

struct Figure {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<Series> series;
  std::vector<std::string> notes;  // written as comment lines in the sidecar
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string render_svg(const Figure& fig, const std::string& hash) {
  constexpr double kW = 720, kH = 480, kL = 80, kR = 200, kT = 50, kB = 60;
  auto tx = [&](double v) { return fig.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return fig.logy ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : fig.series)
    for (auto [x, y] : s.points) {
      if ((fig.logx && x <= 0) || (fig.logy && y <= 0) || !std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y));
      y1 = std::max(y1, ty(y));
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return kL + (tx(v) - x0) / (x1 - x0) * (kW - kL - kR); };
  auto py = [&](double v) { return kH - kB - (ty(v) - y0) / (y1 - y0) * (kH - kT - kB); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<metadata>config_hash=" << hash << "</metadata>\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(fig.title)
    << "</text>\n";
  o << "<text x=\"" << kW - 8 << "\" y=\"" << kH - 8 << "\" text-anchor=\"end\" font-size=\"9\" fill=\"#888\">config "
    << hash << "</text>\n";
  o << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR << "\" height=\"" << kH - kT - kB
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fx = x0 + (x1 - x0) * i / 5.0;
    const double fy = y0 + (y1 - y0) * i / 5.0;
    const double sx = kL + (kW - kL - kR) * i / 5.0;
    const double sy = kH - kB - (kH - kT - kB) * i / 5.0;
    o << "<text x=\"" << sx << "\" y=\"" << kH - kB + 16 << "\" text-anchor=\"middle\">"
      << num(fig.logx ? std::pow(10.0, fx) : fx) << "</text>\n";
    o << "<text x=\"" << kL - 6 << "\" y=\"" << sy + 4 << "\" text-anchor=\"end\">"
      << num(fig.logy ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  o << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 22 << "\" text-anchor=\"middle\">"
    << escape(fig.xlabel) << "</text>\n";
  o << "<text x=\"18\" y=\"" << (kT + kH - kB) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << (kT + kH - kB) / 2 << ")\">" << escape(fig.ylabel) << "</text>\n";

  for (std::size_t i = 0; i < fig.series.size(); ++i) {
    const Series& s = fig.series[i];
    const char* color = kPalette[i % std::size(kPalette)];
    std::ostringstream pts;
    for (auto [x, y] : s.points) {
      if ((fig.logx && x <= 0) || (fig.logy && y <= 0) || !std::isfinite(x) || !std::isfinite(y)) continue;
      pts << px(x) << ',' << py(y) << ' ';
      if (s.markers) o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
      << (s.dashed ? " stroke-dasharray=\"5,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
    const double ly = kT + 14 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << kW - kR + 12 << "\" y1=\"" << ly - 4 << "\" x2=\"" << kW - kR + 36 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"5,4\"" : "")
      << "/>\n";
    o << "<text x=\"" << kW - kR + 42 << "\" y=\"" << ly << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::string render_csv(const Figure& fig, const std::string& hash) {
  std::ostringstream o;
  o.precision(17);
  o << "# config_hash=" << hash << '\n';
  for (const std::string& n : fig.notes) o << "# " << n << '\n';
  o << "series,x,y\n";
  for (const Series& s : fig.series)
    for (auto [x, y] : s.points) o << '"' << s.name << "\"," << x << ',' << y << '\n';
  return o.str();
}

std::string group_name(double eps, int n) {
  std::ostringstream s;
  s << "eps=" << eps << " n=" << n;
  return s.str();
}

std::vector<double> payload_values(const ResultRow& r, const fs::path& dir) {
  std::vector<double> out;
  if (r.payload.is_array()) {
    for (const auto& v : r.payload) out.push_back(v.get<double>());
  } else if (r.payload.is_object()) {
    const fs::path file = dir / r.payload.at("file").get<std::string>();
    std::ifstream in(file, std::ios::binary);
    if (!in) throw PreconditionError("missing payload file " + file.string());
    out.resize(r.payload.at("count").get<std::size_t>());
    in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * sizeof(double)));
  } else {
    out.push_back(r.payload.get<double>());
  }
  return out;
}

using GroupKey = std::pair<double, int>;
// observable -> (group -> realization -> values)
using Table = std::map<GroupKey, std::map<std::size_t, std::vector<double>>>;

Table collect(const std::vector<ResultRow>& rows, const std::string& observable, const fs::path& dir) {
  Table t;
  for (const ResultRow& r : rows)
    if (r.observable == observable) t[{r.epsilon, r.n}][r.realization] = payload_values(r, dir);
  if (t.empty()) throw PreconditionError("results lack the '" + observable + "' observable needed for this plot");
  return t;
}

std::vector<std::pair<double, double>> histogram(const std::vector<double>& v, double lo, double hi, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double w = (hi - lo) / bins;
  std::size_t total = 0;
  for (double x : v) {
    if (x < lo || x >= hi) continue;
    counts[static_cast<std::size_t>((x - lo) / w)] += 1.0;
    ++total;
  }
  std::vector<std::pair<double, double>> out;
  for (int b = 0; b < bins; ++b)
    out.emplace_back(lo + w * (b + 0.5), total ? counts[b] / (static_cast<double>(v.size()) * w) : 0.0);
  return out;
}

Figure dos_figure(const std::vector<ResultRow>& rows, const fs::path& dir, bool goe) {
  Figure f{"Density of states", "E", "density", false, false, {}, {}};
  const Table eig = collect(rows, "eigenvalues", dir);
  for (const auto& [key, reps] : eig) {
    std::vector<double> all;
    for (const auto& [r, v] : reps) all.insert(all.end(), v.begin(), v.end());
    const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
    const double span = *hi - *lo;
    f.series.push_back({group_name(key.first, key.second), histogram(all, *lo - 0.01 * span, *hi + 0.01 * span, 60)});
    if (goe) {
      const double ks = ks_distance(all, [](double x) { return semicircle_cdf(x); });
      f.notes.push_back("ks_semicircle[" + group_name(key.first, key.second) + "]=" + std::to_string(ks));
    }
  }
  if (goe) {
    Series sc{"semicircle R=2", {}, false, true};
    for (int i = 0; i <= 200; ++i) {
      const double x = -2.0 + 4.0 * i / 200.0;
      sc.points.emplace_back(x, semicircle_density(x));
    }
    f.series.push_back(std::move(sc));
  }
  return f;
}

Figure spacing_figure(const std::vector<ResultRow>& rows, const fs::path& dir,
                      const std::optional<ReferenceStatistics>& refs) {
  Figure f{"Nearest-neighbour spacing in the bulk window", "s (local mean spacing = 1)", "p(s)", false, false, {}, {}};
  const Table eig = collect(rows, "eigenvalues", dir);
  const Table win = collect(rows, "bulk_window", dir);
  for (const auto& [key, reps] : eig) {
    std::vector<double> spacings;
    for (const auto& [r, v] : reps) {
      const auto& w = win.at(key).at(r);
      std::vector<double> in;
      for (double e : v)
        if (e >= w[0] && e <= w[1]) in.push_back(e);
      if (in.size() < 3) continue;
      const double mean = (in.back() - in.front()) / static_cast<double>(in.size() - 1);
      for (std::size_t i = 1; i < in.size(); ++i) spacings.push_back((in[i] - in[i - 1]) / mean);
    }
    f.series.push_back({group_name(key.first, key.second), histogram(spacings, 0.0, 4.0, 40)});
  }
  Series ws{"Wigner surmise", {}, false, true};
  Series po{"Poisson", {}, false, true};
  for (int i = 0; i <= 200; ++i) {
    const double s = 4.0 * i / 200.0;
    ws.points.emplace_back(s, wigner_surmise_pdf(s));
    po.points.emplace_back(s, std::exp(-s));
  }
  f.series.push_back(std::move(ws));
  f.series.push_back(std::move(po));
  if (refs) {
    for (const GoeReference& g : refs->goe) {
      Series gs{"GOE reference N=" + std::to_string(g.dim), {}, true, false};
      for (std::size_t i = 1; i < g.spacing_grid.size(); ++i) {
        const double h = g.spacing_grid[i] - g.spacing_grid[i - 1];
        gs.points.emplace_back(0.5 * (g.spacing_grid[i] + g.spacing_grid[i - 1]),
                               (g.spacing_cdf[i] - g.spacing_cdf[i - 1]) / h);
      }
      f.series.push_back(std::move(gs));
      f.notes.push_back("goe_reference_ks_to_surmise[" + std::to_string(g.dim) + "]=" + std::to_string(g.ks_to_surmise));
    }
  }
  return f;
}

Figure phase_figure(const std::vector<ResultRow>& rows, const fs::path& dir,
                    const std::optional<ReferenceStatistics>& refs) {
  Figure f{"Mean gap ratio by level", "n", "<r>", false, false, {}, {}};
  const Table gr = collect(rows, "gap_ratio.values", dir);
  std::map<double, Series> by_eps;
  int nmin = 1000, nmax = 0;
  for (const auto& [key, reps] : gr) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& [r, v] : reps) {
      for (double x : v) sum += x;
      count += v.size();
    }
    Series& s = by_eps[key.first];
    s.name = "eps=" + num(key.first);
    s.markers = true;
    s.points.emplace_back(key.second, sum / static_cast<double>(count));
    nmin = std::min(nmin, key.second);
    nmax = std::max(nmax, key.second);
  }
  for (auto& [eps, s] : by_eps) f.series.push_back(std::move(s));
  f.series.push_back({"Poisson 2ln2-1", {{nmin, poisson_mean_gap_ratio()}, {nmax, poisson_mean_gap_ratio()}}, false, true});
  if (refs && !refs->goe.empty()) {
    const GoeReference& g = refs->goe.back();
    f.series.push_back({"GOE reference N=" + std::to_string(g.dim), {{nmin, g.mean_r}, {nmax, g.mean_r}}, false, true});
  }
  return f;
}

Figure flow_figure(const std::vector<ResultRow>& rows, const fs::path& dir) {
  Figure f{"Invariance constant for 95% coverage", "n", "C", false, false, {}, {}};
  const Table cov = collect(rows, "flow.coverage_constant", dir);
  std::map<double, Series> by_eps;
  for (const auto& [key, reps] : cov) {
    std::vector<double> v;
    for (const auto& [r, x] : reps) v.push_back(x.at(0));
    Series& s = by_eps[key.first];
    s.name = "eps=" + num(key.first);
    s.markers = true;
    s.points.emplace_back(key.second, quantile(v, 0.5));
  }
  for (auto& [eps, s] : by_eps) f.series.push_back(std::move(s));
  return f;
}

Figure holder_figure(const std::vector<ResultRow>& rows, const fs::path& dir) {
  Figure f{"2 eta Im G at eigenvector peaks", "eta", "2 eta Im G", true, true, {}, {}};
  const Table etas = collect(rows, "holder.etas", dir);
  const Table curves = collect(rows, "holder.curve", dir);
  for (const auto& [key, reps] : curves) {
    const std::vector<double>& eta = etas.at(key).begin()->second;
    std::vector<double> mean(eta.size(), 0.0);
    for (const auto& [r, c] : reps)
      for (std::size_t i = 0; i < c.size(); ++i) mean[i] += c[i] / static_cast<double>(reps.size());
    Series s{group_name(key.first, key.second), {}, true, false};
    for (std::size_t i = 0; i < eta.size(); ++i) s.points.emplace_back(eta[i], mean[i]);
    f.series.push_back(std::move(s));
  }
  return f;
}

}  // namespace

std::string to_string(PlotKind k) {
  switch (k) {
    case PlotKind::dos: return "dos";
    case PlotKind::spacing: return "spacing";
    case PlotKind::phase: return "phase";
    case PlotKind::flow: return "flow";
    case PlotKind::holder: return "holder";
  }
  return "?";
}

PlotKind parse_plot_kind(const std::string& s) {
  for (PlotKind k : {PlotKind::dos, PlotKind::spacing, PlotKind::phase, PlotKind::flow, PlotKind::holder})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown plot kind '" + s + "' (expected dos, spacing, phase, flow, holder)");
}

PlotFiles emit_plots(const fs::path& results_dir, PlotKind kind, const fs::path& out_dir,
                     const std::optional<fs::path>& references) {
  const std::vector<ResultRow> rows = read_rows(results_dir / "results.ndjson");
  if (rows.empty()) throw PreconditionError("empty result set in " + results_dir.string());
  std::ifstream mf(results_dir / "manifest.json");
  if (!mf) throw PreconditionError("missing manifest in " + results_dir.string());
  const json manifest = json::parse(mf);
  const std::string hash = manifest.at("config_hash").get<std::string>();
  const bool goe = manifest.at("config").value("model", std::string()) == "goe";
  std::optional<ReferenceStatistics> refs;
  if (references) refs = read_references(*references);

  Figure fig;
  switch (kind) {
    case PlotKind::dos: fig = dos_figure(rows, results_dir, goe); break;
    case PlotKind::spacing: fig = spacing_figure(rows, results_dir, refs); break;
    case PlotKind::phase: fig = phase_figure(rows, results_dir, refs); break;
    case PlotKind::flow: fig = flow_figure(rows, results_dir); break;
    case PlotKind::holder: fig = holder_figure(rows, results_dir); break;
  }
  fs::create_directories(out_dir);
  PlotFiles files{out_dir / (to_string(kind) + ".svg"), out_dir / (to_string(kind) + ".csv")};
  std::ofstream(files.svg) << render_svg(fig, hash);
  std::ofstream(files.csv) << render_csv(fig, hash);
  return files;
}

}  // namespace ultrametric
