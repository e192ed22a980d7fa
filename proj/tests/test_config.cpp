#include <sstream>

#include <gtest/gtest.h>

#include "ringopt/app/config.hpp"

using namespace ringopt;
using namespace ringopt::app;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST(Config, CommittedDefaultDescribesTheBaseline) {
  const ExperimentConfig cfg = load_config(RINGOPT_CONFIG_DIR "/default.ini");
  EXPECT_EQ(cfg.ring.n_vehicles, 40);
  EXPECT_NEAR(cfg.ring.track_length, 1016.93182224619232, 1e-9);
  EXPECT_TRUE(cfg.ring.av_indices.empty());
  ASSERT_TRUE(cfg.ring.perturbation.has_value());
  EXPECT_EQ(cfg.ring.perturbation->override_accel, -3.0);
  EXPECT_EQ(cfg.ring.horizon.t0, 1400);
  EXPECT_EQ(cfg.ring.horizon.t1, 6200);
  EXPECT_EQ(cfg.loss.window.t0, 1400);
}

TEST(Config, CommittedConfigsAllLoad) {
  for (const char* name : {"default", "control", "equilibrium", "gradcheck_small"}) {
    EXPECT_NO_THROW(load_config(std::string(RINGOPT_CONFIG_DIR "/") + name + ".ini")) << name;
  }
}

TEST(Config, MissingSectionsTakeDefaults) {
  const ExperimentConfig cfg = parse("[ring]\nn_vehicles = 22\n");
  EXPECT_NEAR(cfg.ring.track_length, 559.312502235405777, 1e-9);
  EXPECT_FALSE(cfg.ring.perturbation.has_value());
  EXPECT_EQ(cfg.ring.controller.params, default_params(ControllerKind::FollowerStopper));
  EXPECT_EQ(cfg.ring.ema_beta, 0.01);
}

TEST(Config, InitialStateIsEvenlySpaced) {
  const ExperimentConfig cfg = parse("[ring]\nn_vehicles = 4\ntrack_length = 200\ninitial_speed = 7\n");
  const SimState s = cfg.initial_state();
  EXPECT_EQ(s.positions, (std::vector<double>{0, 50, 100, 150}));
  EXPECT_EQ(s.speeds, std::vector<double>(4, 7.0));
  EXPECT_EQ(s.avg_speeds, std::vector<double>(4, 7.0));
}

TEST(Config, ControllerParametersByName) {
  const ExperimentConfig cfg = parse(
      "[control]\ncontroller = linear\nav_indices = 0, 3\nk_v = 0.5\ns_ref = 30\n");
  EXPECT_EQ(cfg.ring.controller.kind, ControllerKind::Linear);
  EXPECT_EQ(cfg.ring.av_indices, (std::vector<int>{0, 3}));
  EXPECT_EQ(cfg.ring.controller.params[1], 0.5);
  EXPECT_EQ(cfg.ring.controller.params[4], 30.0);
  EXPECT_EQ(cfg.ring.controller.params[0], default_params(ControllerKind::Linear)[0]);
}

TEST(Config, RoundTripsThroughWriter) {
  ExperimentConfig cfg = load_config(RINGOPT_CONFIG_DIR "/control.ini");
  cfg.ring.controller = {ControllerKind::IdmController, {21.123456789012345, 0.4, 3.3, 0.9, 2.2}};
  cfg.initial_speed = 14.999999999999998;
  cfg.seed = 99;
  std::ostringstream out;
  write_config(out, cfg);
  const ExperimentConfig back = parse(out.str());
  EXPECT_EQ(back.ring.controller.kind, cfg.ring.controller.kind);
  EXPECT_EQ(back.ring.controller.params, cfg.ring.controller.params);
  EXPECT_EQ(back.ring.track_length, cfg.ring.track_length);
  EXPECT_EQ(back.initial_speed, cfg.initial_speed);
  EXPECT_EQ(back.ring.av_indices, cfg.ring.av_indices);
  EXPECT_EQ(back.ring.perturbation->start_step, cfg.ring.perturbation->start_step);
  EXPECT_EQ(back.ring.horizon.t1, cfg.ring.horizon.t1);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.optimizer.history, cfg.optimizer.history);
}

TEST(Config, RejectsBadInput) {
  const char* bad[] = {
      "[ring]\nspeed = 3\n",                           // unknown key
      "[rings]\nn_vehicles = 3\n",                     // unknown section
      "n_vehicles = 3\n",                              // key outside a section
      "[ring]\nn_vehicles = 3.5\n",                    // not an integer
      "[ring]\ndt = fast\n",                           // not a number
      "[ring]\ndt = 0\n",                              // invariant
      "[ring]\nt0 = 10\nt1 = 5\n",                     // empty horizon
      "[ring]\nn_vehicles = 3\ntrack_length = 10\n",   // vehicles do not fit
      "[human]\nc4 = -1\n",                            // non-positive IDM parameter
      "[control]\ncontroller = pid\n",                 // unknown controller
      "[control]\ncontroller = fs\nk_s = 1\n",         // key of another controller
      "[control]\nr = 50\n",                           // outside the optimization box
      "[control]\nav_indices = 0, 99\n",               // no such vehicle
      "[perturbation]\nenabled = maybe\n",             // not a boolean
      "[optimizer]\nhistory = 0\n",                    // count must be positive
      "[ring\nn_vehicles = 3\n",                       // syntax
      "[ring]\nn_vehicles = 3\nn_vehicles = 4\n",      // duplicate key
  };
  for (const char* text : bad) {
    EXPECT_THROW(parse(text), ConfigError) << text;
  }
  EXPECT_THROW(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST(Config, DisabledPerturbation) {
  EXPECT_FALSE(parse("[perturbation]\nenabled = false\nvehicle_id = 2\n").ring.perturbation);
  EXPECT_TRUE(parse("[perturbation]\nvehicle_id = 2\n").ring.perturbation);
}
