#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ringopt/app/commands.hpp"

using namespace ringopt::app;
namespace fs = std::filesystem;

namespace {

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ringopt_cmd_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  Streams io() { return {out_, err_}; }

  fs::path dir_;
  std::ostringstream out_, err_;
};

// A quick optimization problem: 10 vehicles, short horizon, few iterations.
const char* kSmallOptimize = R"(
[ring]
n_vehicles = 10
initial_speed = 12.3
t0 = 40
t1 = 400
[perturbation]
vehicle_id = 5
start_step = 10
duration_steps = 16
override_accel = -2
[control]
controller = linear
av_indices = 0
[optimizer]
max_iterations = 4
)";

std::string config(const std::string& name) { return std::string(RINGOPT_CONFIG_DIR "/") + name; }

}  // namespace

TEST_F(Commands, SimulateEquilibrium) {
  ASSERT_EQ(cmd_simulate(config("equilibrium.ini"), path("out"), io()), kOk) << err_.str();
  const std::string metrics = read(path("out/metrics.txt"));
  EXPECT_NE(metrics.find("avg_speed_mps = 15\n"), std::string::npos) << metrics;
  const std::string csv = read(path("out/trajectory.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "t,vehicle_id,position_m,speed_mps,accel_mps2,headway_m,is_av");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 22 * 4801);
}

TEST_F(Commands, MalformedConfigWritesNothing) {
  const std::string cfg = write("bad.ini", "[ring]\nn_vehicles = many\n");
  EXPECT_EQ(cmd_simulate(cfg, path("out"), io()), kConfigError);
  EXPECT_FALSE(fs::exists(path("out")));
  EXPECT_NE(err_.str().find("n_vehicles"), std::string::npos);
  EXPECT_EQ(cmd_simulate(path("missing.ini"), path("out"), io()), kConfigError);
}

TEST_F(Commands, CollisionExitCode) {
  // Vehicle 0 accelerates hard into its leader.
  const std::string cfg = write("crash.ini",
                                "[ring]\nn_vehicles = 5\nt0 = 0\nt1 = 400\n"
                                "[perturbation]\nvehicle_id = 0\nstart_step = 0\n"
                                "duration_steps = 400\noverride_accel = 4\n");
  EXPECT_EQ(cmd_simulate(cfg, path("out"), io()), kCollision);
  EXPECT_NE(err_.str().find("collision"), std::string::npos);
}

TEST_F(Commands, IoErrorExitCode) {
  write("blocker", "not a directory");
  EXPECT_EQ(cmd_simulate(config("equilibrium.ini"), path("blocker/out"), io()), kIoError);
  EXPECT_EQ(cmd_plot(path("missing.csv"), path("x.svg"), io()), kIoError);
}

TEST_F(Commands, GradcheckPassesAndMutationFails) {
  GradCheckArgs args;
  args.config_path = config("gradcheck_small.ini");
  args.controller = "all";
  args.out_dir = path("gc");
  EXPECT_EQ(cmd_gradcheck(args, io()), kOk) << out_.str();
  for (const char* kind : {"fs", "linear", "idm"}) {
    EXPECT_TRUE(fs::exists(path(std::string("gc/gradcheck_") + kind + ".csv"))) << kind;
  }
  EXPECT_NE(out_.str().find("ratio"), std::string::npos);

  args.mutate = true;
  args.controller = "linear";
  EXPECT_EQ(cmd_gradcheck(args, io()), kCheckFailed);
}

TEST_F(Commands, GradcheckNeedsAnAv) {
  GradCheckArgs args;
  args.config_path = config("equilibrium.ini");
  EXPECT_EQ(cmd_gradcheck(args, io()), kConfigError);
}

TEST_F(Commands, OptimizeIsDeterministicAndBestParamsRoundTrip) {
  const std::string cfg = write("small.ini", kSmallOptimize);
  ASSERT_EQ(cmd_optimize(cfg, std::nullopt, path("a"), 3, io()), kOk) << err_.str();
  ASSERT_EQ(cmd_optimize(cfg, std::nullopt, path("b"), 3, io()), kOk) << err_.str();
  const std::string history = read(path("a/history.csv"));
  EXPECT_EQ(history.substr(0, history.find('\n')), "iter,F,projected_grad_norm,avg_speed_mps");
  EXPECT_EQ(history, read(path("b/history.csv")));

  ASSERT_EQ(cmd_simulate(path("a/best_params.ini"), path("replay"), io()), kOk);
  EXPECT_EQ(read(path("a/metrics.txt")), read(path("replay/metrics.txt")));
  EXPECT_EQ(read(path("a/trajectory.csv")), read(path("replay/trajectory.csv")));
}

TEST_F(Commands, OptimizeControllerOverride) {
  const std::string cfg = write("small.ini", kSmallOptimize);
  ASSERT_EQ(cmd_optimize(cfg, "idm", path("o"), std::nullopt, io()), kOk) << err_.str();
  EXPECT_NE(read(path("o/best_params.ini")).find("controller = idm"), std::string::npos);
  EXPECT_EQ(cmd_optimize(cfg, "pid", path("p"), std::nullopt, io()), kConfigError);
}

TEST_F(Commands, OptimizerFailureExitCode) {
  // The starting controller ignores its leader and crashes, so the optimizer
  // has no feasible point to start from.
  std::string text = kSmallOptimize;
  text.insert(text.find("[optimizer]"), "k_s = 0\nk_v = 0\nk_0 = 2\nv_des = 33\n");
  const std::string cfg = write("crash.ini", text);
  EXPECT_EQ(cmd_optimize(cfg, std::nullopt, path("o"), std::nullopt, io()), kOptimizerFailure);
}

TEST_F(Commands, PlotFromSimulation) {
  ASSERT_EQ(cmd_simulate(config("gradcheck_small.ini"), path("sim"), io()), kOk);
  ASSERT_EQ(cmd_plot(path("sim/trajectory.csv"), path("fig/plot.svg"), io()), kOk) << err_.str();
  const std::string svg = read(path("fig/plot.svg"));
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);

  const std::string bad = write("bad.csv", "a,b\n1,2\n");
  EXPECT_EQ(cmd_plot(bad, path("bad.svg"), io()), kConfigError);
}
