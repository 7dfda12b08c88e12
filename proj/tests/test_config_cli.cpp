#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scenes.hpp"
#include "vcd/cli.hpp"
#include "vcd/config.hpp"
#include "vcd/image_io.hpp"
#include "vcd/pipeline.hpp"

namespace vcd {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun vcd(std::vector<std::string> args) {
  args.insert(args.begin(), "vcd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("vcd_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }

  fs::path dir;
};

TEST(Config, ParsesKeysAndComments) {
  Settings s;
  std::istringstream in("# defaults\nrho = 0.02  # inline\n\nfov_deg=70\nrange = remap\npad_px = 12\n");
  apply_config(s, in);
  EXPECT_DOUBLE_EQ(s.wiener.rho, 0.02);
  EXPECT_DOUBLE_EQ(s.fov_deg, 70.0);
  EXPECT_EQ(s.range, RangePolicy::AffineRemap);
  EXPECT_EQ(s.tiles.pad_px, 12);
}

TEST(Config, UnknownKeyAndBadValueNameTheLine) {
  for (const char* text : {"rho = 0.01\nwat = 3\n", "rho = abc\n", "tile_px = 1.5\n", "novalue\n"}) {
    Settings s;
    std::istringstream in(text);
    try {
      apply_config(s, in);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Validation);
      EXPECT_NE(std::string(e.what()).find("line"), std::string::npos) << e.what();
    }
  }
}

TEST(Config, TextRoundTrip) {
  Settings s;
  s.wiener = {0.003, 0.04, 1e-4};
  s.optics.pixel_pitch_m = 0.0002;
  s.edges.dilate_px = 5;
  s.hysteresis.angle_rad = deg_to_rad(2.5);
  Settings back;
  std::istringstream in(to_config_text(s));
  apply_config(back, in);
  EXPECT_EQ(to_config_text(back), to_config_text(s));
  EXPECT_DOUBLE_EQ(back.wiener.rho, 0.003);
  EXPECT_NEAR(back.hysteresis.angle_rad, s.hysteresis.angle_rad, 1e-15);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::Usage), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::Validation), 2);
  EXPECT_EQ(exit_code_for(ErrorKind::Io), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::OpticalConfig), 4);
  EXPECT_EQ(exit_code_for(ErrorKind::Resolution), 4);
}

TEST_F(CliTest, FlagsOverrideFileOverridesBuiltins) {
  const std::string cfg = path("c.txt");
  std::ofstream(cfg) << "rho = 0.02\nrho_text = 0.2\nfov_deg = 70\n";
  const auto builtin = key_values(vcd({"config"}).out);
  EXPECT_EQ(builtin.at("rho"), "0.01");
  EXPECT_EQ(builtin.at("fov_deg"), "80");
  const auto file = key_values(vcd({"--config", cfg, "config"}).out);
  EXPECT_EQ(file.at("rho"), "0.02");
  EXPECT_EQ(file.at("fov_deg"), "70");
  const CliRun r = vcd({"--config", cfg, "--fov", "60", "config", "--rho", "0.03"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto flags = key_values(r.out);
  EXPECT_EQ(flags.at("rho"), "0.03");
  EXPECT_EQ(flags.at("rho_text"), "0.2");
  EXPECT_EQ(flags.at("fov_deg"), "60");
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(vcd({}).code, 2);
  EXPECT_EQ(vcd({"bogus"}).code, 2);
  EXPECT_EQ(vcd({"psf", "--radius-px", "3", "--sphere-diopters", "-2"}).code, 2);
  EXPECT_EQ(vcd({"psf", "--radius-px", "3", "--size", "8"}).code, 2);
  EXPECT_EQ(vcd({"config", "--range", "sideways"}).code, 2);
}

TEST_F(CliTest, MissingInputExitsThree) {
  const CliRun r = vcd({"metrics", path("nope.png"), path("nope.png")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("nope.png"), std::string::npos);
}

TEST_F(CliTest, NumericalErrorsExitFour) {
  const CliRun r = vcd({"psf", "--zernike", "3,3,0.1", "--zernike-grid", "16"});
  EXPECT_EQ(r.code, 4) << r.out << r.err;
}

TEST_F(CliTest, MetricsOfIdenticalImages) {
  const std::string img = path("a.png");
  write_png(img, testing::band_limited_rgb(48, 40, 3));
  const CliRun r = vcd({"metrics", img, img});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["ssim"], 1.0);
  EXPECT_EQ(j["ncc"], 1.0);
  EXPECT_EQ(j["psnr_y"], "inf");
  const CliRun kv = vcd({"metrics", "--format", "kv", img, img});
  EXPECT_EQ(key_values(kv.out).at("ssim"), "1");
}

TEST_F(CliTest, SpherePrescriptionUsesHalfMetreFocus) {
  const std::string img = path("a.png");
  write_png(img, RasterImage::gray(testing::band_limited_scene(64, 64, 2)));
  const CliRun r = vcd({"precorrect", "--sphere-diopters", "-2.0", "--distance", "1.0", img, path("o.png")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(r.out);
  EXPECT_EQ(kv.at("focus_distance_m"), "0.5");
  EXPECT_EQ(kv.at("blur_radius_m"), "0.004");
  EXPECT_TRUE(fs::exists(path("o.png")));
}

TEST_F(CliTest, PsfWritesKernelText) {
  const CliRun r = vcd({"psf", "--radius-px", "2.5", "--size", "7", "-o", path("k.txt")});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream in(path("k.txt"));
  const Kernel k = read_kernel_text(in);
  EXPECT_EQ(k.width(), 7);
  EXPECT_NEAR(k.sum(), 1.0, 1e-12);
  const CliRun z = vcd({"psf", "--zernike", "3,-3,0.5", "--zernike-grid", "64", "-o", path("z.txt")});
  EXPECT_EQ(z.code, 0) << z.err;
}

TEST_F(CliTest, PrecorrectIsDeterministicAndSimulateRuns) {
  const std::string img = path("a.png");
  write_png(img, testing::band_limited_rgb(80, 64, 4));
  for (const char* out : {"o1.png", "o2.png"}) {
    const CliRun r = vcd({"precorrect", "--radius-px", "3", "--tile", "32", "--ringing", "on", img, path(out)});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(read_file(path("o1.png")), read_file(path("o2.png")));
  const CliRun s = vcd({"simulate", "--radius-px", "3", path("o1.png"), path("sim.png")});
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_EQ(read_png(path("sim.png")).width(), 80);
}

TEST_F(CliTest, VideoReportsThroughput) {
  const CliRun r = vcd({"video", "--synthetic", "12", "--width", "64", "--height", "48", "--radius-px", "2",
                     "-o", path("out.raw")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto kv = key_values(r.out);
  EXPECT_EQ(kv.at("frames"), "12");
  EXPECT_EQ(kv.at("underruns"), "0");
  EXPECT_TRUE(kv.count("throughput_fps"));
  std::FILE* f = std::fopen(path("out.raw").c_str(), "rb");
  ASSERT_NE(f, nullptr);
  RawStreamSource src(f, true);
  EXPECT_EQ(src.width(), 64);
  EXPECT_TRUE(src.read(11).has_value());
  EXPECT_FALSE(src.read(12).has_value());
}

TEST_F(CliTest, PoseReplayWritesOneFramePerSample) {
  const std::string img = path("a.png");
  write_png(img, RasterImage::gray(testing::band_limited_scene(48, 48, 5)));
  std::ofstream(path("poses.log")) << "0 1.0 0 0\n100 0.8 0.2 0\n200 0.8 0.2 0.3\n";
  const CliRun r = vcd({"pose-replay", path("poses.log"), img, "--out-dir", path("rep")});
  ASSERT_EQ(r.code, 0) << r.err;
  int pngs = 0;
  for (const auto& e : fs::directory_iterator(path("rep"))) pngs += e.path().extension() == ".png";
  EXPECT_GE(pngs, 3);
}

}  // namespace
}  // namespace vcd
