#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

namespace fs = std::filesystem;
using drowsegate::GrayImage;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

CliRun run_cli(const fixtures::TempDir& scratch, const std::string& args) {
  const fs::path out = scratch / "stdout.txt";
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = std::string("'") + DROWSEGATE_CLI + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

bool has_line(const std::string& text, const std::string& line) {
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) {
    if (l == line) return true;
  }
  return false;
}

// A directory with a handful of 25x21 windows, enough for compare-thresholds.
fs::path windows_dir(const fixtures::TempDir& scratch, const std::string& name, bool open) {
  const fixtures::EyeCorpus corpus = fixtures::eye_window_corpus();
  const fs::path dir = scratch / name;
  fs::create_directories(dir);
  const std::vector<GrayImage>& src = open ? corpus.open : corpus.closed;
  for (std::size_t i = 0; i < 4; ++i) drowsegate::write_pgm(dir / ("w" + std::to_string(i) + ".pgm"), src[i]);
  return dir;
}

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  fixtures::TempDir scratch("cli_help");
  const CliRun help = run_cli(scratch, "--help");
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("detect"), std::string::npos);
  EXPECT_NE(help.out.find("--coeff-c"), std::string::npos);

  EXPECT_EQ(run_cli(scratch, "").code, 2);
  EXPECT_EQ(run_cli(scratch, "detect").code, 2);
  EXPECT_EQ(run_cli(scratch, "--no-such-flag detect x").code, 2);
  EXPECT_EQ(run_cli(scratch, "--avg-mode sideways calibrate .").code, 2);
  EXPECT_EQ(run_cli(scratch, "--weight-polarity upside calibrate .").code, 2);
}

TEST(Cli, InvalidValuesExitTwo) {
  fixtures::TempDir scratch("cli_invalid");
  const fs::path open = windows_dir(scratch, "open", true);
  const fs::path closed = windows_dir(scratch, "closed", false);
  const std::string tail = " compare-thresholds '" + open.string() + "' '" + closed.string() + "'";
  EXPECT_EQ(run_cli(scratch, "--coeff-c 1.5" + tail).code, 2);
  EXPECT_EQ(run_cli(scratch, "--fth 0" + tail).code, 2);
  EXPECT_EQ(run_cli(scratch, "--gauss-block 4" + tail).code, 2);
  const CliRun missing = run_cli(scratch, "eval-eyes '" + (scratch / "nowhere").string() + "'");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find("error="), std::string::npos);
}

TEST(Cli, ConfigPrecedence) {
  fixtures::TempDir scratch("cli_config");
  const fs::path open = windows_dir(scratch, "open", true);
  const fs::path closed = windows_dir(scratch, "closed", false);
  const fs::path cfg = scratch / "run.cfg";
  std::ofstream(cfg) << "# tuned for the test rig\nfth=30\ncoeff-c=0.5\navg-mode=literal\n";
  const std::string tail = " compare-thresholds '" + open.string() + "' '" + closed.string() + "'";

  const CliRun defaults = run_cli(scratch, tail);
  ASSERT_EQ(defaults.code, 0) << defaults.err;
  EXPECT_TRUE(has_line(defaults.out, "# fth=24"));
  EXPECT_TRUE(has_line(defaults.out, "# coeff-c=0.720"));
  EXPECT_TRUE(has_line(defaults.out, "# avg-mode=normalized"));

  const CliRun from_file = run_cli(scratch, "--config '" + cfg.string() + "'" + tail);
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_TRUE(has_line(from_file.out, "# fth=30"));
  EXPECT_TRUE(has_line(from_file.out, "# coeff-c=0.500"));
  EXPECT_TRUE(has_line(from_file.out, "# avg-mode=literal"));

  const CliRun overridden = run_cli(scratch, "--config '" + cfg.string() + "' --fth 12" + tail);
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_TRUE(has_line(overridden.out, "# fth=12"));
  EXPECT_TRUE(has_line(overridden.out, "# coeff-c=0.500"));

  // six table rows after the header
  int rows = 0;
  std::istringstream in(defaults.out);
  for (std::string l; std::getline(in, l);) rows += (!l.empty() && l[0] != '#');
  EXPECT_GE(rows, 6);
}

TEST(Cli, UnknownConfigKeyRejected) {
  fixtures::TempDir scratch("cli_badcfg");
  const fs::path cfg = scratch / "bad.cfg";
  std::ofstream(cfg) << "fth=30\nthreshold-of-doom=3\n";
  EXPECT_EQ(run_cli(scratch, "--config '" + cfg.string() + "' calibrate .").code, 2);
  EXPECT_EQ(run_cli(scratch, "--config '" + (scratch / "absent.cfg").string() + "' calibrate .").code, 2);
}

TEST(Cli, TruncatedVideoAbortsWithRuntimeCode) {
  fixtures::TempDir scratch("cli_trunc");
  const fs::path video = scratch / "v.y4m";
  fixtures::write_y4m(video, std::vector<GrayImage>(3, GrayImage::Constant(48, 64, 90)));
  fs::resize_file(video, fs::file_size(video) - 100);
  const CliRun r = run_cli(scratch, "--cascade '" + fixtures::cascade_path() + "' detect '" + video.string() + "'");
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_NE(r.err.find("error=FrameDecodeError"), std::string::npos) << r.err;
  EXPECT_NE(r.out.find("warning=no_face frame_index=1"), std::string::npos) << r.out;
}

TEST(Cli, DetectStreamsEventsAndWritesTrace) {
  fixtures::TempDir scratch("cli_detect");
  const fs::path video = scratch / "v.y4m";
  fixtures::write_y4m(video, std::vector<GrayImage>(4, GrayImage::Constant(48, 64, 90)));
  const fs::path obs = scratch / "trace.obs";
  const CliRun r = run_cli(scratch, "--cascade '" + fixtures::cascade_path() + "' --obs-out '" + obs.string() +
                                     "' detect '" + video.string() + "'");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(has_line(r.out, "warning=no_face frame_index=3"));
  EXPECT_TRUE(fs::exists(obs));
}

TEST(Cli, BenchOverBudgetExitsFour) {
  fixtures::TempDir scratch("cli_bench");
  const fs::path video = scratch / "bench.y4m";
  fixtures::write_y4m(video, std::vector<GrayImage>(300, GrayImage::Constant(480, 640, 120)));
  const std::string base = "--cascade '" + fixtures::cascade_path() + "' ";
  const CliRun tight = run_cli(scratch, base + "--budget-ms 0.001 bench '" + video.string() + "'");
  EXPECT_EQ(tight.code, 4) << tight.err;
  EXPECT_NE(tight.out.find("status=over_budget"), std::string::npos);

  const CliRun loose = run_cli(scratch, base + "--budget-ms 100000 bench '" + video.string() + "'");
  EXPECT_EQ(loose.code, 0) << loose.err;
  EXPECT_NE(loose.out.find("status=ok"), std::string::npos);

  fixtures::write_y4m(scratch / "short.y4m", std::vector<GrayImage>(10, GrayImage::Constant(480, 640, 120)));
  EXPECT_EQ(run_cli(scratch, base + "bench '" + (scratch / "short.y4m").string() + "'").code, 2);
}
