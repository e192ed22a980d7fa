#include "ringopt/app/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "ringopt/errors.hpp"
#include "ringopt/vehicle_models.hpp"

namespace ringopt::app {

namespace pt = boost::property_tree;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
    throw ConfigError(fmt::format("[{}] {}: cannot parse '{}'", section, key, raw));
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) {
      throw ConfigError(fmt::format("[{}] {}: value must be finite", section, key));
    }
  }
  return value;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(fmt::format("[{}] {}: expected true or false, got '{}'", section, key, raw));
}

std::vector<int> parse_index_list(const std::string& raw) {
  std::vector<int> out;
  const std::string text = trim(raw);
  if (text.empty() || text == "none") return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<int>("control", "av_indices", item));
  return out;
}

// Reads one section, rejecting keys outside `allowed`.
class Section {
 public:
  Section(const pt::ptree& root, std::string name, std::set<std::string> allowed)
      : name_(std::move(name)) {
    if (auto child = root.get_child_optional(name_)) {
      for (const auto& [key, node] : *child) {
        if (!allowed.count(key)) {
          throw ConfigError(fmt::format("[{}] unknown key '{}'", name_, key));
        }
        if (!node.empty()) throw ConfigError(fmt::format("[{}] {}: nested value", name_, key));
        values_[key] = node.data();
      }
      present_ = true;
    }
  }

  bool present() const { return present_; }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  template <typename T>
  void read(const std::string& key, T& target) const {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    if constexpr (std::is_same_v<T, bool>) {
      target = parse_bool(name_, key, it->second);
    } else {
      target = parse_number<T>(name_, key, it->second);
    }
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : trim(it->second);
  }

 private:
  std::string name_;
  std::map<std::string, std::string> values_;
  bool present_ = false;
};

void check_sections(const pt::ptree& root) {
  static const std::set<std::string> known{"ring",    "human", "perturbation",
                                           "control", "loss",  "optimizer"};
  for (const auto& [name, node] : root) {
    if (!known.count(name)) throw ConfigError(fmt::format("unknown section [{}]", name));
    if (node.empty() && !node.data().empty()) {
      throw ConfigError(fmt::format("key '{}' outside any section", name));
    }
  }
}

}  // namespace

SimState ExperimentConfig::initial_state() const {
  const int n = ring.n_vehicles;
  const double spacing = ring.track_length / n;
  SimState s;
  s.positions.resize(n);
  for (int i = 0; i < n; ++i) s.positions[i] = i * spacing;
  s.speeds.assign(n, initial_speed);
  s.avg_speeds.assign(n, initial_speed);
  return s;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
  }
  check_sections(root);

  ExperimentConfig cfg;
  RingConfig& ring = cfg.ring;
  ring.perturbation.reset();
  ring.av_indices.clear();

  const Section ring_s(root, "ring", {"n_vehicles", "initial_speed", "track_length",
                                      "vehicle_length", "dt", "ema_beta", "t0", "t1"});
  ring_s.read("n_vehicles", ring.n_vehicles);
  ring_s.read("initial_speed", cfg.initial_speed);
  ring_s.read("vehicle_length", ring.vehicle_length);
  ring_s.read("dt", ring.dt);
  ring_s.read("ema_beta", ring.ema_beta);
  ring_s.read("t0", ring.horizon.t0);
  ring_s.read("t1", ring.horizon.t1);

  const Section human(root, "human", {"c1", "c2", "c3", "c4", "c5"});
  human.read("c1", ring.human_params.c1);
  human.read("c2", ring.human_params.c2);
  human.read("c3", ring.human_params.c3);
  human.read("c4", ring.human_params.c4);
  human.read("c5", ring.human_params.c5);

  try {
    ring.human_params.validate();
    if (ring_s.has("track_length")) {
      ring_s.read("track_length", ring.track_length);
    } else {
      const double spacing = equilibrium_headway(cfg.initial_speed, ring.human_params);
      ring.track_length = ring.n_vehicles * (spacing + ring.vehicle_length);
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.initial_speed < 0.0) throw ConfigError("[ring] initial_speed must be non-negative");
  if (ring.horizon.t0 < 0) throw ConfigError("[ring] t0 must be non-negative");

  const Section pert(root, "perturbation", {"enabled", "vehicle_id", "start_step",
                                            "duration_steps", "override_accel"});
  bool enabled = pert.present();
  pert.read("enabled", enabled);
  if (enabled) {
    PerturbationSpec p;
    pert.read("vehicle_id", p.vehicle_id);
    pert.read("start_step", p.start_step);
    pert.read("duration_steps", p.duration_steps);
    pert.read("override_accel", p.override_accel);
    ring.perturbation = p;
  }

  // The parameter keys depend on the controller, so read the kind first.
  ControllerKind kind = ControllerKind::FollowerStopper;
  if (auto node = root.get_child_optional("control")) {
    if (auto k = node->get_optional<std::string>("controller")) {
      try {
        kind = parse_controller_kind(trim(*k));
      } catch (const std::exception& e) {
        throw ConfigError(fmt::format("[control] controller: {}", e.what()));
      }
    }
  }
  const auto names = param_names(kind);
  std::set<std::string> control_keys{"controller", "av_indices"};
  control_keys.insert(names.begin(), names.end());
  const Section control(root, "control", control_keys);
  ring.av_indices = parse_index_list(control.text("av_indices", ""));
  std::vector<double> params = default_params(kind);
  for (std::size_t j = 0; j < names.size(); ++j) control.read(names[j], params[j]);
  const Bounds bounds = bounds_for(kind);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (params[j] < bounds.lower[j] || params[j] > bounds.upper[j]) {
      throw ConfigError(fmt::format("[control] {} = {} outside [{}, {}]", names[j], params[j],
                                    bounds.lower[j], bounds.upper[j]));
    }
  }
  ring.controller = {kind, params};

  const Section loss(root, "loss", {"penalty_scale", "min_gap"});
  loss.read("penalty_scale", cfg.loss.penalty_scale);
  loss.read("min_gap", cfg.loss.min_gap);
  cfg.loss.window = ring.horizon;

  const Section opt(root, "optimizer", {"history", "tol", "ftol", "max_iterations",
                                        "max_line_search_evals", "multi_start", "seed"});
  OptimizeOptions& o = cfg.optimizer;
  opt.read("history", o.history);
  opt.read("tol", o.tol);
  opt.read("ftol", o.ftol);
  opt.read("max_iterations", o.max_iterations);
  opt.read("max_line_search_evals", o.max_line_search_evals);
  opt.read("multi_start", o.multi_start);
  opt.read("seed", cfg.seed);
  o.seed = cfg.seed;
  if (o.history < 1 || o.max_iterations < 0 || o.max_line_search_evals < 1 || o.multi_start < 1) {
    throw ConfigError("[optimizer] counts must be positive");
  }
  if (!(o.tol >= 0.0) || !(o.ftol >= 0.0)) throw ConfigError("[optimizer] tolerances must be >= 0");

  try {
    ring.validate();
    cfg.loss.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config '{}'", path));
  return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  const RingConfig& r = cfg.ring;
  fmt::print(out, "[ring]\n");
  fmt::print(out, "n_vehicles = {}\n", r.n_vehicles);
  fmt::print(out, "initial_speed = {:.17g}\n", cfg.initial_speed);
  fmt::print(out, "track_length = {:.17g}\n", r.track_length);
  fmt::print(out, "vehicle_length = {:.17g}\n", r.vehicle_length);
  fmt::print(out, "dt = {:.17g}\n", r.dt);
  fmt::print(out, "ema_beta = {:.17g}\n", r.ema_beta);
  fmt::print(out, "t0 = {}\nt1 = {}\n\n", r.horizon.t0, r.horizon.t1);

  const auto h = r.human_params.to_array();
  fmt::print(out, "[human]\n");
  for (std::size_t j = 0; j < h.size(); ++j) fmt::print(out, "c{} = {:.17g}\n", j + 1, h[j]);

  fmt::print(out, "\n[perturbation]\n");
  if (r.perturbation) {
    const auto& p = *r.perturbation;
    fmt::print(out, "enabled = true\nvehicle_id = {}\nstart_step = {}\n", p.vehicle_id, p.start_step);
    fmt::print(out, "duration_steps = {}\noverride_accel = {:.17g}\n", p.duration_steps,
               p.override_accel);
  } else {
    fmt::print(out, "enabled = false\n");
  }

  fmt::print(out, "\n[control]\ncontroller = {}\n", to_string(r.controller.kind));
  fmt::print(out, "av_indices = {}\n",
             r.av_indices.empty() ? std::string("none") : fmt::format("{}", fmt::join(r.av_indices, ",")));
  const auto names = param_names(r.controller.kind);
  for (std::size_t j = 0; j < names.size(); ++j) {
    fmt::print(out, "{} = {:.17g}\n", names[j], r.controller.params[j]);
  }

  fmt::print(out, "\n[loss]\npenalty_scale = {:.17g}\nmin_gap = {:.17g}\n",
             cfg.loss.penalty_scale, cfg.loss.min_gap);

  const OptimizeOptions& o = cfg.optimizer;
  fmt::print(out, "\n[optimizer]\nhistory = {}\ntol = {:.17g}\nftol = {:.17g}\n", o.history, o.tol,
             o.ftol);
  fmt::print(out, "max_iterations = {}\nmax_line_search_evals = {}\nmulti_start = {}\nseed = {}\n",
             o.max_iterations, o.max_line_search_evals, o.multi_start, cfg.seed);
}

}  // namespace ringopt::app
