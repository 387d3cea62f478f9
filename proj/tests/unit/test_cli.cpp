#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "jdsr/commands.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/manifest.hpp"
#include "jdsr/report.hpp"

using namespace jdsr;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result jdsr_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "jdsr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static fs::path dir() { return fs::temp_directory_path() / "jdsr_cli_tests"; }
  static void SetUpTestSuite() {
    fs::remove_all(dir());
    fs::create_directories(dir());
    // A tiny scale-2 checkpoint trained for a handful of steps without augmentation.
    std::ofstream(dir() / "toy.json") << R"({"seed": 1, "network": {"toy_mode": true, "scale": 2},
      "trainer": {"batch_size": 1, "patch_size": 8, "pretrain_steps": 3, "augment": false},
      "data": {"synthetic": {"count": 1, "size": 32, "seed": 2}}})";
    const auto r = jdsr_cli({"train", "--config", (dir() / "toy.json").string(), "--out",
                             (dir() / "run").string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static fs::path checkpoint() { return dir() / "run" / "generator.ckpt"; }

  static fs::path write_rgb(const std::string& name, const cfa::RgbImage& img) {
    const auto p = dir() / name;
    io::write_png(p, img);
    return p;
  }
};

}  // namespace

TEST_F(Cli, MosaicDemosaicRoundTripOfConstantImage) {
  cfa::RgbImage img(12, 16);
  for (std::size_t y = 0; y < 12; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      img.at(0, y, x) = 51 / 255.0f;
      img.at(1, y, x) = 153 / 255.0f;
      img.at(2, y, x) = 204 / 255.0f;
    }
  const auto in = write_rgb("const.png", img);
  for (const char* phase : {"RGGB", "GRBG", "GBRG", "BGGR"}) {
    const auto cfa = dir() / (std::string("const_") + phase + ".png");
    const auto out = dir() / (std::string("const_") + phase + "_rgb.png");
    ASSERT_EQ(jdsr_cli({"mosaic", in.string(), "--out", cfa.string(), "--phase", phase}).code, 0);
    EXPECT_TRUE(fs::exists(io::sidecar_path(cfa)));
    ASSERT_EQ(jdsr_cli({"demosaic", cfa.string(), "--out", out.string()}).code, 0);
    EXPECT_EQ(io::read_image(out), img) << phase;
  }
}

TEST_F(Cli, MosaicWithDownscaleAndOddSizes) {
  const auto in = write_rgb("syn.png", io::synthetic_image(24, 24, 3));
  const auto cfa = dir() / "syn_x2.png";
  ASSERT_EQ(jdsr_cli({"mosaic", in.string(), "--out", cfa.string(), "--downscale", "2"}).code, 0);
  EXPECT_EQ(io::read_cfa(cfa, cfa::Phase::kRGGB).width, 12u);
  const auto odd = write_rgb("odd.png", io::synthetic_image(5, 6, 3));
  EXPECT_EQ(jdsr_cli({"mosaic", odd.string(), "--out", (dir() / "odd_cfa.png").string()}).code,
            cli::kExitData);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(jdsr_cli({"demosaic", (dir() / "nope.png").string(), "--out", "x.png"}).code, cli::kExitData);
  EXPECT_EQ(jdsr_cli({"frobnicate"}).code, cli::kExitConfig);
  EXPECT_EQ(jdsr_cli({"mosaic"}).code, cli::kExitConfig);
  EXPECT_EQ(jdsr_cli({"--help"}).code, cli::kExitOk);
  std::ofstream(dir() / "bad.json") << R"({"network": {"scale": 7}})";
  const auto r = jdsr_cli({"train", "--config", (dir() / "bad.json").string(), "--dry-run"});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("network.scale"), std::string::npos) << r.err;
}

TEST_F(Cli, DryRunReportsPaperParameterCount) {
  const auto r = jdsr_cli({"train", "--config", std::string(JDSR_SOURCE_DIR) + "/configs/paper.json",
                           "--dry-run"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("generator parameters: 3846662"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("config ok"), std::string::npos);
}

TEST_F(Cli, TrainWritesArtifactsAndManifest) {
  for (const char* f : {"pretrain_loss.csv", "generator_pretrain.ckpt", "generator.ckpt", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir() / "run" / f)) << f;
  }
  const auto m = io::read_manifest(dir() / "run" / "manifest.json");
  EXPECT_EQ(m.seed, 1u);
}

TEST_F(Cli, InferIsIdempotentAndSized) {
  const auto in = write_rgb("lr.png", io::synthetic_image(10, 14, 4));
  const auto cfa = dir() / "lr_cfa.png";
  ASSERT_EQ(jdsr_cli({"mosaic", in.string(), "--out", cfa.string()}).code, 0);
  const auto a = dir() / "sr_a.png", b = dir() / "sr_b.png";
  ASSERT_EQ(jdsr_cli({"infer", "--checkpoint", checkpoint().string(), cfa.string(), "--out", a.string()}).code, 0);
  ASSERT_EQ(jdsr_cli({"infer", "--checkpoint", checkpoint().string(), cfa.string(), "--out", b.string(),
                      "--scale", "2"}).code,
            0);
  EXPECT_EQ(slurp(a), slurp(b));
  const auto sr = io::read_image(a);
  EXPECT_EQ(sr.height, 20u);
  EXPECT_EQ(sr.width, 28u);
  EXPECT_TRUE(fs::exists(io::sidecar_path(a)));
}

TEST_F(Cli, InferRefusesWrongScaleAndUnseenPhase) {
  const auto in = write_rgb("lr2.png", io::synthetic_image(8, 8, 5));
  const auto cfa = dir() / "lr2_cfa.png";
  ASSERT_EQ(jdsr_cli({"mosaic", in.string(), "--out", cfa.string(), "--phase", "GBRG"}).code, 0);
  auto r = jdsr_cli({"infer", "--checkpoint", checkpoint().string(), cfa.string(), "--out",
                     (dir() / "x.png").string(), "--phase", "RGGB", "--scale", "4"});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("trained for scale x2"), std::string::npos) << r.err;
  r = jdsr_cli({"infer", "--checkpoint", checkpoint().string(), cfa.string(), "--out",
                (dir() / "x.png").string()});
  EXPECT_EQ(r.code, cli::kExitData);
  EXPECT_NE(r.err.find("GBRG"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir() / "x.png"));
}

TEST_F(Cli, EvalTwoDatasetsThreeScales) {
  for (const char* ds : {"setA", "setB"}) {
    fs::create_directories(dir() / ds);
    io::write_png(dir() / ds / "img0.png", io::synthetic_image(48, 48, ds[3]));
    io::write_png(dir() / ds / "img1.png", io::synthetic_image(52, 60, ds[3] + 1));
  }
  const auto out = dir() / "report.csv";
  const auto r = jdsr_cli({"eval", "--data", (dir() / "setA").string(), "--data", (dir() / "setB").string(),
                           "--method", "identity", "--method", "bicubic", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = report::read_csv(out);
  EXPECT_EQ(rows.size(), 2u * 3u * 2u * 2u);  // datasets x scales x methods x protocols
  for (const auto& row : rows) {
    if (row.method == "identity") {
      // The HR image scored against itself.
      EXPECT_TRUE(std::isinf(row.psnr));
      EXPECT_NEAR(row.ssim, 1.0, 1e-12);
    } else {
      EXPECT_TRUE(std::isfinite(row.psnr));
      EXPECT_GT(row.psnr, 15.0);
      EXPECT_LT(row.ssim, 1.0);
    }
    EXPECT_FALSE(row.pi.has_value());
  }
  EXPECT_TRUE(fs::exists(io::sidecar_path(out)));
  // jdsr needs a checkpoint per requested scale.
  EXPECT_EQ(jdsr_cli({"eval", "--data", (dir() / "setA").string(), "--method", "jdsr", "--checkpoint",
                      checkpoint().string()})
                .code,
            cli::kExitConfig);
  const auto jr = jdsr_cli({"eval", "--data", (dir() / "setA").string(), "--scale", "2", "--checkpoint",
                            checkpoint().string(), "--out", (dir() / "report_jdsr.csv").string()});
  ASSERT_EQ(jr.code, 0) << jr.err;
  EXPECT_EQ(report::read_csv(dir() / "report_jdsr.csv").size(), 2u * 2u);  // bicubic + jdsr
}

TEST_F(Cli, ReportRendersGoldenTable) {
  const auto csv = dir() / "golden.csv";
  report::write_csv(csv, {{"set5", 4, "bicubic", "rgb", 28.4213, 0.8104, std::nullopt},
                          {"set5", 4, "jdsr", "rgb", 30.1, 0.85, 2.75}});
  auto r = jdsr_cli({"report", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "method  | set5 x4 rgb \n"
            "--------+-------------\n"
            "bicubic | 28.42/0.8104\n"
            "jdsr    | 30.10/0.8500\n");
  r = jdsr_cli({"report", csv.string(), "--protocol", "rgb"});
  EXPECT_EQ(r.out,
            "method  | set5 x4     \n"
            "--------+-------------\n"
            "bicubic | 28.42/0.8104\n"
            "jdsr    | 30.10/0.8500\n");
  r = jdsr_cli({"report", csv.string(), "--layout", "pi", "--protocol", "rgb"});
  EXPECT_EQ(r.out,
            "method  | set5 x4\n"
            "--------+--------\n"
            "bicubic | -      \n"
            "jdsr    | 2.75   \n");
  EXPECT_EQ(jdsr_cli({"report", csv.string(), "--layout", "bogus"}).code, cli::kExitConfig);
}
