#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "simcurate/errors.hpp"
#include "simcurate/report.hpp"

namespace fs = std::filesystem;

namespace simcurate {
namespace {

constexpr double kWidth = 800, kHeight = 500;
constexpr double kLeft = 70, kRight = 190, kTop = 40, kBottom = 60;

std::string_view colour_for(Method m) {
  switch (m) {
    case Method::base_render: return "#7f7f7f";
    case Method::fil_brightness: return "#ff7f0e";
    case Method::fil_phash: return "#1f77b4";
    case Method::aug_context: return "#2ca02c";
    case Method::aug_random: return "#d62728";
  }
  return "#000000";
}

std::vector<ExperimentRecord> sorted(std::vector<ExperimentRecord> r) {
  std::sort(r.begin(), r.end(), [](const ExperimentRecord& a, const ExperimentRecord& b) {
    if (to_string(a.method) != to_string(b.method)) return to_string(a.method) < to_string(b.method);
    return a.n_images < b.n_images;
  });
  return r;
}

void check_totals(const std::vector<ExperimentRecord>& records) {
  for (const auto& r : records) {
    const double sum = r.stage_sum();
    if (std::abs(sum - r.total_seconds) > 1e-6 * std::max(1.0, std::abs(sum)))
      throw ContractError(fmt::format("record {}/{}: total {} differs from stage sum {}",
                                      to_string(r.method), r.n_images, r.total_seconds, sum));
    for (const auto& [stage, v] : r.stage_times)
      if (v < 0) throw ContractError(fmt::format("record {}/{}: negative time for stage {}",
                                                 to_string(r.method), r.n_images, stage));
  }
}

// 1, 2 or 5 times a power of ten, giving roughly `target` intervals.
double nice_step(double range, int target) {
  if (range <= 0) return 1;
  const double raw = range / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10 * mag;
}

std::string escape(std::string_view s) {
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

}  // namespace

std::string render_report_csv(const std::vector<ExperimentRecord>& input) {
  const auto records = sorted(input);
  std::set<std::string> stages;
  for (const auto& r : records)
    for (const auto& [s, _] : r.stage_times) stages.insert(s);

  std::string out = "method,n_images";
  for (const auto& s : stages) out += "," + s + "_s";
  out += ",total_s,map50,status,hardware\n";
  for (const auto& r : records) {
    out += fmt::format("{},{}", to_string(r.method), r.n_images);
    for (const auto& s : stages) {
      auto it = r.stage_times.find(s);
      out += fmt::format(",{:.3f}", it == r.stage_times.end() ? 0.0 : it->second);
    }
    out += fmt::format(",{:.3f}", r.stage_sum());
    out += r.map50 ? fmt::format(",{:.4f},complete", *r.map50) : std::string(",,pending");
    out += "," + std::string(r.hardware.find(',') == std::string::npos ? r.hardware : "\"" + r.hardware + "\"");
    out += "\n";
  }
  return out;
}

std::string render_report_svg(const std::vector<ExperimentRecord>& input) {
  std::vector<ExperimentRecord> points;
  for (auto& r : sorted(input))
    if (r.complete()) points.push_back(r);

  double max_minutes = 0;
  for (const auto& r : points) max_minutes = std::max(max_minutes, r.stage_sum() / 60.0);
  const double x_step = nice_step(max_minutes > 0 ? max_minutes : 1.0, 6);
  const double x_max = std::max(x_step, std::ceil(max_minutes / x_step) * x_step);
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double minutes) { return kLeft + minutes / x_max * plot_w; };
  auto sy = [&](double map) { return kTop + (1.0 - map) * plot_h; };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" "
      "viewBox=\"0 0 {:.0f} {:.0f}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += fmt::format("<text x=\"{:.1f}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
                   "mAP50 vs total time overhead</text>\n",
                   kLeft + plot_w / 2);

  // Grid and ticks.
  for (int i = 0; i <= 10; ++i) {
    const double v = i / 10.0;
    s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#e0e0e0\"/>\n",
                     kLeft, sy(v), kLeft + plot_w, sy(v));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n",
                     kLeft - 6, sy(v) + 4, v);
  }
  for (double t = 0; t <= x_max + 1e-9; t += x_step) {
    s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#e0e0e0\"/>\n",
                     sx(t), kTop, sx(t), kTop + plot_h);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", sx(t),
                     kTop + plot_h + 18, t);
  }
  s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" "
                   "fill=\"none\" stroke=\"black\"/>\n",
                   kLeft, kTop, plot_w, plot_h);
  s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">total time overhead [min]</text>\n",
                   kLeft + plot_w / 2, kHeight - 14);
  s += fmt::format("<text x=\"18\" y=\"{:.1f}\" text-anchor=\"middle\" "
                   "transform=\"rotate(-90 18 {:.1f})\">mAP50</text>\n",
                   kTop + plot_h / 2, kTop + plot_h / 2);

  // Series, in alphabetical method order.
  std::vector<Method> methods;
  for (const auto& r : points)
    if (methods.empty() || methods.back() != r.method) methods.push_back(r.method);
  for (Method m : methods) {
    const auto colour = colour_for(m);
    std::string poly;
    for (const auto& r : points)
      if (r.method == m) poly += fmt::format("{:.1f},{:.1f} ", sx(r.stage_sum() / 60.0), sy(*r.map50));
    if (!poly.empty()) poly.pop_back();
    s += fmt::format("<g class=\"series\" data-method=\"{}\">\n", to_string(m));
    s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", poly,
                     colour);
    for (const auto& r : points) {
      if (r.method != m) continue;
      const double x = sx(r.stage_sum() / 60.0), y = sy(*r.map50);
      s += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"4\" fill=\"{}\"/>\n", x, y, colour);
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"10\" fill=\"{}\">{}</text>\n", x + 5,
                       y - 5, colour, r.n_images);
    }
    s += "</g>\n";
  }

  // Legend.
  const double lx = kLeft + plot_w + 20;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"14\" height=\"4\" fill=\"{}\"/>\n", lx, ly,
                     colour_for(methods[i]));
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", lx + 20, ly + 5,
                     escape(to_string(methods[i])));
  }
  s += "</svg>\n";
  return s;
}

ReportFiles emit_report(const std::vector<ExperimentRecord>& records, const fs::path& out_dir) {
  check_totals(records);
  if (std::none_of(records.begin(), records.end(), [](const auto& r) { return r.complete(); }))
    throw ContractError("report: no record has a mAP50 value");

  fs::create_directories(out_dir);
  ReportFiles files{out_dir / "report.csv", out_dir / "report.svg"};
  auto write = [](const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report", p);
    out << content;
    if (!out) throw IoError("report write failed", p);
  };
  write(files.csv, render_report_csv(records));
  write(files.svg, render_report_svg(records));
  return files;
}

}  // namespace simcurate
