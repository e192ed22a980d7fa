#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ringopt/objective.hpp"
#include "ringopt/optimizer.hpp"
#include "ringopt/ring_sim.hpp"

namespace ringopt::app {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything one command needs. The initial state is the equilibrium of
// initial_speed spread evenly over the track.
struct ExperimentConfig {
  RingConfig ring;
  double initial_speed = 15.0;  // m/s
  LossConfig loss;
  OptimizeOptions optimizer;
  std::uint64_t seed = 0;

  SimState initial_state() const;
};

/// Parses the INI text. Unknown sections or keys, malformed numbers and
/// violated invariants all raise ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Writes a complete config that parse_config reads back to the same values.
void write_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace ringopt::app
