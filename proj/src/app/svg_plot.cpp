#include "ringopt/app/svg_plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/ostream.h>

namespace ringopt::app {

namespace {

constexpr const char* kHeader = "t,vehicle_id,position_m,speed_mps,accel_mps2,headway_m,is_av";

template <typename T>
T field(std::string_view s, long line) {
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || end != s.data() + s.size()) {
    throw ParseError(fmt::format("line {}: bad field '{}'", line, s));
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

int quantize(double speed, const PlotStyle& style) {
  const double v = std::clamp(speed, style.speed_min, style.speed_max);
  const double u = (v - style.speed_min) / (style.speed_max - style.speed_min);
  return static_cast<int>(std::lround(u * (style.levels - 1)));
}

std::string level_color(int level, const PlotStyle& style) {
  const double u = style.levels > 1 ? static_cast<double>(level) / (style.levels - 1) : 0.0;
  int rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(style.slow_color[c] +
                                          u * (style.fast_color[c] - style.slow_color[c])));
  }
  return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

// Round tick spacing giving roughly `target` intervals.
double tick_step(double span, int target) {
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (m * mag >= raw) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

TrajectoryTable read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw ParseError(fmt::format("unexpected header '{}'", line));

  TrajectoryTable table;
  bool first = true;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cols = split(line);
    if (cols.size() != 7) throw ParseError(fmt::format("line {}: expected 7 fields", lineno));
    TrajectoryPoint p;
    p.t = field<long>(cols[0], lineno);
    const int id = field<int>(cols[1], lineno);
    p.position = field<double>(cols[2], lineno);
    p.speed = field<double>(cols[3], lineno);
    if (id < 0) throw ParseError(fmt::format("line {}: negative vehicle id", lineno));
    if (static_cast<std::size_t>(id) >= table.vehicles.size()) table.vehicles.resize(id + 1);
    auto& track = table.vehicles[id];
    if (!track.empty() && p.t <= track.back().t) {
      throw ParseError(fmt::format("line {}: time not increasing for vehicle {}", lineno, id));
    }
    track.push_back(p);
    table.t_min = first ? p.t : std::min(table.t_min, p.t);
    table.t_max = first ? p.t : std::max(table.t_max, p.t);
    table.position_max = std::max(table.position_max, p.position);
    first = false;
  }
  if (first) throw ParseError("trajectory has no rows");
  return table;
}

std::string speed_color(double speed, const PlotStyle& style) {
  return level_color(quantize(speed, style), style);
}

void write_space_time_svg(std::ostream& out, const TrajectoryTable& table,
                          const PlotStyle& style) {
  const double left = 70, right = 110, top = 20, bottom = 50;
  const double pw = style.width - left - right;
  const double ph = style.height - top - bottom;
  const double t_span = std::max<double>(table.t_max - table.t_min, 1);
  const double y_max = table.position_max > 0 ? table.position_max : 1.0;
  auto sx = [&](double t) { return left + (t - table.t_min) / t_span * pw; };
  auto sy = [&](double x) { return top + ph - x / y_max * ph; };

  fmt::print(out,
             "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
             "viewBox=\"0 0 {0} {1}\">\n",
             style.width, style.height);
  fmt::print(out, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");

  std::size_t longest = 0;
  for (const auto& v : table.vehicles) longest = std::max(longest, v.size());
  const std::size_t stride =
      std::max<std::size_t>(1, (longest + style.max_columns - 1) / std::max(style.max_columns, 1));

  fmt::print(out, "<g class=\"trajectories\" fill=\"none\" stroke-width=\"0.8\">\n");
  for (const auto& track : table.vehicles) {
    if (track.size() < 2) continue;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < track.size(); k += stride) idx.push_back(k);
    if (idx.back() != track.size() - 1) idx.push_back(track.size() - 1);

    std::string points;
    int color = -1;
    auto flush = [&] {
      if (!points.empty()) {
        fmt::print(out, "<polyline stroke=\"{}\" points=\"{}\"/>\n", level_color(color, style),
                   points);
      }
      points.clear();
    };
    for (std::size_t j = 0; j + 1 < idx.size(); ++j) {
      const auto& a = track[idx[j]];
      const auto& b = track[idx[j + 1]];
      if (b.position < a.position) {  // wrapped around the ring
        flush();
        continue;
      }
      const int c = quantize(a.speed, style);
      if (c != color || points.empty()) {
        flush();
        color = c;
        points = fmt::format("{:.1f},{:.1f}", sx(a.t), sy(a.position));
      }
      points += fmt::format(" {:.1f},{:.1f}", sx(b.t), sy(b.position));
    }
    flush();
  }
  fmt::print(out, "</g>\n");

  // Axes and ticks.
  fmt::print(out, "<g class=\"axes\" stroke=\"#000000\" fill=\"none\" stroke-width=\"1\">\n");
  fmt::print(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n", left, top, pw, ph);
  const double dt_tick = tick_step(t_span, 8);
  const double dx_tick = tick_step(y_max, 6);
  for (double t = std::ceil(table.t_min / dt_tick) * dt_tick; t <= table.t_max; t += dt_tick) {
    fmt::print(out, "<line x1=\"{0:.1f}\" y1=\"{1}\" x2=\"{0:.1f}\" y2=\"{2}\"/>\n", sx(t),
               top + ph, top + ph + 5);
  }
  for (double x = 0; x <= y_max; x += dx_tick) {
    fmt::print(out, "<line x1=\"{0}\" y1=\"{1:.1f}\" x2=\"{2}\" y2=\"{1:.1f}\"/>\n", left - 5,
               sy(x), left);
  }
  fmt::print(out, "</g>\n");

  fmt::print(out, "<g class=\"labels\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n");
  for (double t = std::ceil(table.t_min / dt_tick) * dt_tick; t <= table.t_max; t += dt_tick) {
    fmt::print(out, "<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", sx(t),
               top + ph + 18, t);
  }
  for (double x = 0; x <= y_max; x += dx_tick) {
    fmt::print(out, "<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", left - 8,
               sy(x) + 4, x);
  }
  fmt::print(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">time step</text>\n",
             left + pw / 2, style.height - 10);
  fmt::print(out,
             "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" "
             "transform=\"rotate(-90 18 {0})\">position (m)</text>\n",
             top + ph / 2);
  fmt::print(out, "</g>\n");

  // Color bar: fast at the top.
  const double bx = left + pw + 30, bw = 14;
  fmt::print(out,
             "<defs><linearGradient id=\"speed-ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">"
             "<stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/>"
             "</linearGradient></defs>\n",
             level_color(0, style), level_color(style.levels - 1, style));
  fmt::print(out, "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"url(#speed-ramp)\"/>\n",
             bx, top, bw, ph);
  fmt::print(out, "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n");
  fmt::print(out, "<text x=\"{}\" y=\"{}\">{} m/s</text>\n", bx + bw + 4, top + 10,
             style.speed_max);
  fmt::print(out, "<text x=\"{}\" y=\"{}\">{} m/s</text>\n", bx + bw + 4, top + ph,
             style.speed_min);
  fmt::print(out, "</g>\n</svg>\n");
}

}  // namespace ringopt::app
