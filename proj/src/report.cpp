/* Copyright 2026 The Contact Skill Workbench Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "csf/error.hpp"
#include "csf/eval.hpp"

namespace csf {

namespace {

using Table = std::vector<std::vector<std::string>>;

void write_csv(const Table& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  for (const auto& row : table) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw Error("io", "write failed for " + path.string());
}

double cell(const std::string& s) { return std::stod(s); }

struct Series {
  std::vector<double> x, y;
  std::string label;
};

// Minimal static plot: axes, tick labels at the data extremes, one polyline
// or point cloud per series.
std::string svg_plot(const std::string& title, const std::string& x_label, const std::string& y_label,
                     const std::vector<Series>& series, bool scatter) {
  const double w = 640, h = 420, left = 70, right = 20, top = 40, bottom = 50;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) y1 = y0 + 1.0;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
      << "</text>\n"
      << "<text x=\"16\" y=\"" << h / 2 << "\" transform=\"rotate(-90 16 " << h / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">" << y_label << "</text>\n"
      << "<text x=\"" << left << "\" y=\"" << h - bottom + 16 << "\" font-size=\"10\">" << format_number(x0)
      << "</text>\n"
      << "<text x=\"" << w - right << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"end\" font-size=\"10\">"
      << format_number(x1) << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << h - bottom << "\" text-anchor=\"end\" font-size=\"10\">"
      << format_number(y0) << "</text>\n"
      << "<text x=\"" << left - 4 << "\" y=\"" << top + 10 << "\" text-anchor=\"end\" font-size=\"10\">"
      << format_number(y1) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = colors[k % 6];
    if (scatter) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      out << "\"/>\n";
    }
    if (!s.label.empty()) {
      out << "<text x=\"" << w - right - 4 << "\" y=\"" << top + 14 * (k + 1) << "\" text-anchor=\"end\" fill=\""
          << color << "\" font-size=\"11\">" << s.label << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<Series> per_trial(const Table& t) {
  std::vector<Series> out;
  std::string current;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (out.empty() || t[i][0] != current) {
      current = t[i][0];
      out.push_back({});
    }
    out.back().x.push_back(cell(t[i][1]));
    out.back().y.push_back(cell(t[i][2]));
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << text;
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ReportTables build_report(const std::vector<RolloutLog>& logs, const std::vector<OffsetTrial>& trials,
                          double histogram_bin) {
  if (logs.empty() && trials.empty()) throw Error("empty", "nothing to report");
  ReportTables t;
  t.force_vs_distance.push_back({"trial_id", "distance_m", "abs_force_n"});
  t.torque_vs_distance.push_back({"trial_id", "distance_m", "abs_torque_nm"});
  for (std::size_t i = 0; i < logs.size(); ++i) {
    for (const auto& s : logs[i].steps) {
      t.force_vs_distance.push_back({std::to_string(i), format_number(s.distance), format_number(s.force)});
      t.torque_vs_distance.push_back({std::to_string(i), format_number(s.distance), format_number(s.torque)});
    }
  }
  t.cumulative_histogram.push_back({"distance_bin_m", "trials_at_or_beyond"});
  t.offset_scatter.push_back({"lin_offset_m", "rot_offset_rad", "final_distance_m", "class"});
  std::vector<double> finals;
  for (const auto& tr : trials) {
    finals.push_back(tr.final_distance);
    t.offset_scatter.push_back({format_number(tr.lin_offset), format_number(tr.rot_offset),
                                format_number(tr.final_distance), tr.outcome_class});
  }
  for (const auto& row : cumulative_histogram(finals, histogram_bin)) {
    t.cumulative_histogram.push_back({format_number(row.distance_bin), std::to_string(row.trials_at_or_beyond)});
  }
  return t;
}

void report_emit(const ReportTables& tables, const std::string& dir, bool svg) {
  if (tables.force_vs_distance.size() <= 1 && tables.offset_scatter.size() <= 1) {
    throw Error("empty", "report has no rollout or trial rows");
  }
  const std::filesystem::path root(dir);
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) throw Error("io", "cannot create " + dir + ": " + ec.message());
  write_csv(tables.force_vs_distance, root / "force_vs_distance.csv");
  write_csv(tables.torque_vs_distance, root / "torque_vs_distance.csv");
  write_csv(tables.cumulative_histogram, root / "cumulative_histogram.csv");
  write_csv(tables.offset_scatter, root / "offset_scatter.csv");
  if (!svg) return;
  if (tables.force_vs_distance.size() > 1) {
    write_text(root / "force_vs_distance.svg", svg_plot("Force vs distance to goal", "distance [m]", "|f| [N]",
                                                        per_trial(tables.force_vs_distance), false));
    write_text(root / "torque_vs_distance.svg", svg_plot("Torque vs distance to goal", "distance [m]",
                                                         "|t| [N m]", per_trial(tables.torque_vs_distance), false));
  }
  if (tables.offset_scatter.size() > 1) {
    Series hist;
    for (std::size_t i = 1; i < tables.cumulative_histogram.size(); ++i) {
      hist.x.push_back(cell(tables.cumulative_histogram[i][0]));
      hist.y.push_back(cell(tables.cumulative_histogram[i][1]));
    }
    write_text(root / "cumulative_histogram.svg",
               svg_plot("Trials at or beyond distance", "final distance [m]", "trials", {hist}, false));
    std::vector<Series> classes;
    for (const char* name : {"success", "near_miss", "fail"}) {
      Series s;
      s.label = name;
      for (std::size_t i = 1; i < tables.offset_scatter.size(); ++i) {
        if (tables.offset_scatter[i][3] != name) continue;
        s.x.push_back(cell(tables.offset_scatter[i][0]));
        s.y.push_back(cell(tables.offset_scatter[i][1]));
      }
      classes.push_back(std::move(s));
    }
    write_text(root / "offset_scatter.svg",
               svg_plot("Outcome by target offset", "linear offset [m]", "rotational offset [rad]", classes, true));
  }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open " + path);
  Table out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) row.push_back(field);
    if (!line.empty() && line.back() == ',') row.emplace_back();
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace csf
