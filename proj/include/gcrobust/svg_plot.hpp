#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gcrobust/metrics_io.hpp"

namespace gcr {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct Chart {
  std::string title;
  std::string x_label = "epoch";
  std::string y_label;
  std::vector<Series> series;
};

/// Data-space bounds actually used for the axes.
struct ChartRange {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
};

inline ChartRange chart_range(const Chart& chart) {
  ChartRange r;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) return r;
  if (x0 == x1) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  if (y0 == y1) {
    const double pad = y0 == 0.0 ? 0.5 : std::abs(y0) * 0.1;
    y0 -= pad;
    y1 += pad;
  } else {
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  return {x0, x1, y0, y1};
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return colors[i % 10];
}

}  // namespace detail

inline std::string render_svg(const Chart& chart, int width = 720, int height = 420) {
  using detail::fmt;
  const double left = 70, right = 200, top = 40, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  const ChartRange r = chart_range(chart);
  auto sx = [&](double x) { return left + (x - r.x_min) / (r.x_max - r.x_min) * pw; };
  auto sy = [&](double y) { return top + ph - (y - r.y_min) / (r.y_max - r.y_min) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) + "\" height=\"" +
       std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::escape_xml(chart.title) + "</text>\n";
  s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = r.x_min + (r.x_max - r.x_min) * t / 4.0;
    const double fy = r.y_min + (r.y_max - r.y_min) * t / 4.0;
    s += "<text x=\"" + fmt(sx(fx)) + "\" y=\"" + fmt(top + ph + 18) + "\" text-anchor=\"middle\">" + fmt(fx) +
         "</text>\n";
    s += "<text x=\"" + fmt(left - 6) + "\" y=\"" + fmt(sy(fy) + 4) + "\" text-anchor=\"end\">" + fmt(fy) + "</text>\n";
    s += "<line x1=\"" + fmt(left) + "\" x2=\"" + fmt(left + pw) + "\" y1=\"" + fmt(sy(fy)) + "\" y2=\"" +
         fmt(sy(fy)) + "\" stroke=\"#ddd\"/>\n";
  }
  s += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(height - 10.0) + "\" text-anchor=\"middle\">" +
       detail::escape_xml(chart.x_label) + "</text>\n";
  s += "<text transform=\"translate(16," + fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape_xml(chart.y_label) + "</text>\n";

  for (std::size_t i = 0; i < chart.series.size(); ++i) {
    const Series& ser = chart.series[i];
    if (!ser.points.empty()) {
      s += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(detail::palette(i)) + "\" points=\"";
      for (const auto& [x, y] : ser.points) s += fmt(sx(x)) + "," + fmt(sy(y)) + " ";
      s += "\"/>\n";
    }
    const double ly = top + 10 + 18.0 * static_cast<double>(i);
    s += "<line x1=\"" + fmt(left + pw + 12) + "\" x2=\"" + fmt(left + pw + 32) + "\" y1=\"" + fmt(ly) + "\" y2=\"" +
         fmt(ly) + "\" stroke=\"" + detail::palette(i) + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt(left + pw + 38) + "\" y=\"" + fmt(ly + 4) + "\">" + detail::escape_xml(ser.label) +
         "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

struct PlotRun {
  std::string label;
  MetricsTable table;
};

struct PlotReport {
  std::vector<std::filesystem::path> files;
  std::vector<std::string> warnings;
};

/// Builds the chart families (accuracy, memorization, raw and
/// max-normalized energy, loss) for one or more runs.
inline std::vector<std::pair<std::string, Chart>> build_charts(std::span<const PlotRun> runs) {
  using Getter = std::function<double(const EpochRecord&)>;
  auto add = [&](Chart& chart, const std::string& name, const Getter& get, bool normalize = false) {
    for (const auto& run : runs) {
      Series s;
      s.label = runs.size() > 1 ? run.label + " " + name : name;
      double scale = 1.0;
      if (normalize) {
        double peak = 0.0;
        for (const auto& r : run.table.rows) peak = std::max(peak, std::abs(get(r)));
        if (peak > 0.0) scale = 1.0 / peak;
      }
      for (const auto& r : run.table.rows) s.points.emplace_back(r.epoch, get(r) * scale);
      chart.series.push_back(std::move(s));
    }
  };
  std::vector<std::pair<std::string, Chart>> out;

  Chart acc{"Accuracy", "epoch", "accuracy", {}};
  add(acc, "train", [](const EpochRecord& r) { return r.train_acc; });
  add(acc, "test", [](const EpochRecord& r) { return r.test_acc; });
  out.emplace_back("accuracy.svg", std::move(acc));

  Chart mem{"Clean vs noisy training samples", "epoch", "accuracy", {}};
  add(mem, "clean", [](const EpochRecord& r) { return r.clean_train_acc; });
  add(mem, "noisy vs assigned", [](const EpochRecord& r) { return r.noisy_acc_vs_assigned; });
  add(mem, "noisy vs true", [](const EpochRecord& r) { return r.noisy_acc_vs_true; });
  out.emplace_back("memorization.svg", std::move(mem));

  Chart energy{"Dirichlet energy", "epoch", "energy", {}};
  add(energy, "energy", [](const EpochRecord& r) { return r.dirichlet_energy; });
  out.emplace_back("energy.svg", std::move(energy));

  Chart energy_norm{"Dirichlet energy (max-normalized)", "epoch", "energy / max", {}};
  add(energy_norm, "energy", [](const EpochRecord& r) { return r.dirichlet_energy; }, true);
  out.emplace_back("energy_normalized.svg", std::move(energy_norm));

  Chart loss{"Training loss", "epoch", "loss", {}};
  add(loss, "loss", [](const EpochRecord& r) { return r.train_loss; });
  out.emplace_back("loss.svg", std::move(loss));
  return out;
}

/// Reads metrics.csv from each run directory and writes one SVG per chart
/// family into `out_dir`.
inline PlotReport plot_runs(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_dir) {
  PlotReport report;
  std::vector<PlotRun> runs;
  for (const auto& dir : run_dirs) {
    PlotRun run;
    run.label = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
    run.table = read_metrics(dir / "metrics.csv");
    report.warnings.insert(report.warnings.end(), run.table.warnings.begin(), run.table.warnings.end());
    runs.push_back(std::move(run));
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& [name, chart] : build_charts(runs)) {
    const auto path = out_dir / name;
    std::ofstream f(path);
    f << render_svg(chart);
    if (!f) throw DataError("cannot write " + path.string());
    report.files.push_back(path);
  }
  return report;
}

}  // namespace gcr
