#pragma once

#include <array>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ringopt::app {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rows of a trajectory CSV that matter for plotting.
struct TrajectoryPoint {
  long t = 0;
  double position = 0.0;
  double speed = 0.0;
};

struct TrajectoryTable {
  std::vector<std::vector<TrajectoryPoint>> vehicles;  // indexed by vehicle_id, sorted by t
  long t_min = 0;
  long t_max = 0;
  double position_max = 0.0;
};

/// Reads the CSV written by write_trajectory_csv. The header must match exactly.
TrajectoryTable read_trajectory_csv(std::istream& in);

// Speeds are clamped to [speed_min, speed_max] and mapped linearly from
// slow_color to fast_color, quantized to `levels` shades.
struct PlotStyle {
  double speed_min = 0.0;   // m/s
  double speed_max = 25.0;  // m/s
  std::array<int, 3> slow_color{0xd7, 0x30, 0x1f};
  std::array<int, 3> fast_color{0x1a, 0x98, 0x50};
  int levels = 26;
  int max_columns = 1200;  // time samples per vehicle after decimation
  double width = 1000.0;
  double height = 600.0;
};

/// "#rrggbb" for a speed.
std::string speed_color(double speed, const PlotStyle& style = {});

/// Space-time diagram: time step on x, ring position on y, one polyline chain
/// per vehicle colored by speed and broken where the vehicle wraps the ring.
void write_space_time_svg(std::ostream& out, const TrajectoryTable& table,
                          const PlotStyle& style = {});

}  // namespace ringopt::app
