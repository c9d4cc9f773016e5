#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <unistd.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"

namespace fs = std::filesystem;
namespace cli = pfac::cli;

namespace {

std::string config_path(const std::string& name) { return std::string(PFAC_CONFIG_DIR) + "/" + name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pfac_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

std::string error_of(const std::string& text) {
  try {
    cli::parse_config(text, "t.cfg");
  } catch (const pfac::ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Config, BundledConfigsValidate) {
  for (const char* name : {"numeric-2d.cfg", "numeric-2d-auto.cfg", "stt-missile.cfg"}) {
    EXPECT_NO_THROW(cli::load_config(config_path(name))) << name;
  }
  const auto c = cli::load_config(config_path("numeric-2d.cfg"));
  EXPECT_EQ(c.scenario.mu, (std::vector<double>{0.2, 0.2}));
  EXPECT_EQ(c.scenario.k0, (std::vector<double>{0.01, 0.01}));
  EXPECT_EQ(c.scenario.x0, (std::vector<double>{-2.0, 3.0}));
  const auto m = cli::load_config(config_path("stt-missile.cfg"));
  EXPECT_EQ(m.scenario.angle_unit, pfac::AngleUnit::Degree);
  EXPECT_EQ(m.scenario.x0[0], 10.0);
}

TEST(Config, NegativeMuIsASchemaErrorWithKeyPath) {
  const auto msg = error_of("scenario = numeric-2d\ncontroller.mu = -1, 0.2\n");
  EXPECT_NE(msg.find("controller.mu[0]"), std::string::npos) << msg;
  EXPECT_NE(msg.find("t.cfg:2"), std::string::npos) << msg;
}

TEST(Config, RejectsUnknownDuplicateAndMalformedKeys) {
  EXPECT_NE(error_of("sim.horizonn = 3\n").find("unknown key"), std::string::npos);
  EXPECT_NE(error_of("sim.step = 0.1\nsim.step = 0.2\n").find("already set"), std::string::npos);
  EXPECT_NE(error_of("sim.step = fast\n").find("sim.step"), std::string::npos);
  EXPECT_NE(error_of("controller.sabotage = yes\n").find("boolean"), std::string::npos);
  EXPECT_NE(error_of("just some text\n").find("key = value"), std::string::npos);
  EXPECT_NE(error_of("scenario = cartpole\n").find("unknown scenario"), std::string::npos);
  EXPECT_NE(error_of("theta.1.offset = 1\ntheta.1.lower = 1\ntheta.1.upper = 1\ntheta.3.offset = 2\n")
                .find("without gaps"),
            std::string::npos);
  EXPECT_NE(error_of("theta.1.colour = red\n").find("unknown theta field"), std::string::npos);
  EXPECT_NE(error_of("controller.mode = fancy\n").find("controller.mode"), std::string::npos);
}

TEST(Config, CrossKeyErrorsSurfaceBeforeSimulation) {
  // three gains for a two-stage plant
  EXPECT_FALSE(error_of("controller.mu = 1, 1, 1\n").empty());
  // sinusoid leaving its box
  const auto msg = error_of(
      "theta.1.kind = sinusoid\ntheta.1.offset = 1\ntheta.1.amplitude = 0.2\ntheta.1.omega = 1\n"
      "theta.1.lower = 0.9\ntheta.1.upper = 1.1\n"
      "theta.2.offset = 2\ntheta.2.lower = 2\ntheta.2.upper = 2\n");
  EXPECT_NE(msg.find("theta1"), std::string::npos) << msg;
  EXPECT_FALSE(error_of("scenario = stt-missile\nmissile.tau_a = -0.01\n").empty());
}

TEST(Config, CanonicalTextRoundTrips) {
  for (const char* name : {"numeric-2d.cfg", "stt-missile.cfg"}) {
    const auto a = cli::load_config(config_path(name));
    const auto b = cli::parse_config(cli::to_text(a));
    EXPECT_EQ(cli::to_text(a), cli::to_text(b));
    EXPECT_EQ(cli::config_hash(a), cli::config_hash(b));
  }
}

TEST(Config, HashTracksInputsButNotOutputLocation) {
  auto a = cli::load_config(config_path("numeric-2d.cfg"));
  auto b = a;
  b.scenario.output_dir = "elsewhere";
  b.sweep.workers = 7;
  EXPECT_EQ(cli::config_hash(a), cli::config_hash(b));
  b.scenario.seed = 2;
  EXPECT_NE(cli::config_hash(a), cli::config_hash(b));
  auto c = a;
  c.scenario.mode = pfac::PsiMode::Auto;
  EXPECT_NE(cli::config_hash(a), cli::config_hash(c));
  EXPECT_EQ(cli::config_hash(a).size(), 16u);
}

TEST_F(TempDir, RunWritesRegistryEntryAndReproducesCsvBytes) {
  cli::Overrides ov;
  ov.out = dir_.string();
  const auto cfg = cli::resolve_config(config_path("stt-missile.cfg"), ov);
  std::ostringstream log;
  EXPECT_EQ(cli::cmd_run(cfg, log), cli::kOk) << log.str();
  const fs::path run = dir_ / cli::config_hash(cfg);
  for (const char* f : {"config.cfg", "trajectory.csv", "summary.json", "report.json", "x.svg", "k.svg", "u.svg",
                        "record.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  const auto first = slurp(run / "trajectory.csv");
  EXPECT_EQ(cli::cmd_run(cfg, log), cli::kOk);
  EXPECT_EQ(first, slurp(run / "trajectory.csv"));
  EXPECT_NE(slurp(run / "x.svg").find("<polyline"), std::string::npos);

  // the stored canonical config reproduces the same hash
  EXPECT_EQ(cli::config_hash(cli::load_config((run / "config.cfg").string())), cli::config_hash(cfg));
  EXPECT_EQ(cli::cmd_verify_run(dir_.string(), cli::config_hash(cfg), {}, log), cli::kOk);
}

TEST_F(TempDir, VerifyLookupErrors) {
  std::ostringstream log;
  EXPECT_THROW(cli::cmd_verify_run(dir_.string(), "", {}, log), pfac::ConfigError);
  EXPECT_THROW(cli::cmd_verify_run(dir_.string(), "0123456789abcdef", {}, log), pfac::ConfigError);
}

TEST_F(TempDir, SabotagedVerifyFails) {
  cli::Overrides ov;
  ov.out = dir_.string();
  auto cfg = cli::resolve_config(config_path("numeric-2d.cfg"), ov);
  cfg.scenario.sabotage = true;
  cfg.scenario.horizon = 20.0;
  std::ostringstream log;
  EXPECT_NE(cli::cmd_verify(cfg, log), cli::kOk);
}

TEST_F(TempDir, MonteCarloRejectsZeroRunsAndPersistsReport) {
  cli::Overrides ov;
  ov.out = dir_.string();
  auto cfg = cli::resolve_config(config_path("stt-missile.cfg"), ov);
  std::ostringstream log;
  EXPECT_THROW(cli::cmd_montecarlo(cfg, 0, log), pfac::ConfigError);
  EXPECT_EQ(cli::cmd_montecarlo(cfg, 4, log), cli::kOk) << log.str();
  EXPECT_TRUE(fs::exists(dir_ / cli::config_hash(cfg) / "montecarlo-4.json"));
}

TEST_F(TempDir, PlotReRendersFromCsv) {
  cli::Overrides ov;
  ov.out = dir_.string();
  const auto cfg = cli::resolve_config(config_path("stt-missile.cfg"), ov);
  std::ostringstream log;
  cli::cmd_run(cfg, log);
  const fs::path csv = dir_ / cli::config_hash(cfg) / "trajectory.csv";
  EXPECT_EQ(cli::cmd_plot(csv.string(), (dir_ / "plots").string(), log), cli::kOk);
  const auto k = slurp(dir_ / "plots" / "k.svg");
  EXPECT_NE(k.find(">k2<"), std::string::npos);
  EXPECT_NE(k.find(">k3<"), std::string::npos);
  EXPECT_THROW(cli::cmd_plot((dir_ / "missing.csv").string(), "", log), pfac::ConfigError);
}
