#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/manifest.hpp"
#include "jdsr/report.hpp"

using namespace jdsr;
namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const auto d = fs::temp_directory_path() / "jdsr_io_tests";
  fs::create_directories(d);
  return d / name;
}

cfa::RgbImage quantised(std::size_t h, std::size_t w) {
  auto img = io::synthetic_image(h, w, 2);
  for (auto& v : img.planes) v = std::round(v * 255.0f) / 255.0f;
  return img;
}

}  // namespace

TEST(ImageIo, PngRoundTripOfEightBitValues) {
  const auto img = quantised(10, 14);
  io::write_png(tmp("rt.png"), img);
  EXPECT_EQ(io::read_image(tmp("rt.png")), img);
}

TEST(ImageIo, PpmIsRead) {
  const auto p = tmp("img.ppm");
  {
    std::ofstream f(p, std::ios::binary);
    f << "P6\n# comment\n2 1\n255\n";
    const unsigned char px[] = {255, 0, 0, 0, 51, 255};
    f.write(reinterpret_cast<const char*>(px), sizeof px);
  }
  const auto img = io::read_image(p);
  ASSERT_EQ(img.width, 2u);
  EXPECT_EQ(img.at(0, 0, 0), 1.0f);
  EXPECT_EQ(img.at(1, 0, 1), 0.2f);
  EXPECT_EQ(img.at(2, 0, 1), 1.0f);
}

TEST(ImageIo, CfaSixteenBitRoundTrip) {
  const auto m = cfa::mosaic(quantised(8, 8), cfa::Phase::kGRBG);
  io::write_cfa(tmp("m.png"), m);
  const auto back = io::read_cfa(tmp("m.png"), cfa::Phase::kGRBG);
  EXPECT_EQ(back, m);
}

TEST(ImageIo, ErrorsAreDataErrors) {
  EXPECT_THROW(io::read_image(tmp("missing.png")), DataError);
  std::ofstream(tmp("bad.png")) << "garbage";
  EXPECT_THROW(io::read_image(tmp("bad.png")), DataError);
}

TEST(ImageIo, ListImagesIsSorted) {
  const auto d = tmp("listing");
  fs::remove_all(d);
  fs::create_directories(d);
  for (const char* n : {"b.png", "a.ppm", "c.txt"}) std::ofstream(d / n) << "x";
  const auto l = io::list_images(d);
  ASSERT_EQ(l.size(), 2u);
  EXPECT_EQ(l[0].filename(), "a.ppm");
  EXPECT_EQ(l[1].filename(), "b.png");
}

TEST(Manifest, RoundTripWithHashes) {
  const auto artifact = tmp("artifact.bin");
  std::ofstream(artifact) << "abc";
  EXPECT_EQ(io::sha256_file(artifact), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  io::Manifest m;
  m.command = "jdsr test";
  m.seed = 9;
  m.config_hash = "deadbeef";
  m.config_json = R"({"seed": 9})";
  m.add_output(artifact);
  m.fields["k"] = "v";
  io::write_manifest(io::sidecar_path(artifact), m);
  EXPECT_EQ(io::sidecar_path(artifact).filename(), "artifact.bin.manifest.json");
  const auto back = io::read_manifest(io::sidecar_path(artifact));
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(back.outputs, m.outputs);
  EXPECT_EQ(back.fields.at("k"), "v");
  EXPECT_FALSE(io::git_describe().empty());
}

TEST(Report, CsvRoundTripAndFormatting) {
  const std::vector<report::ReportRow> rows = {
      {"set5", 2, "bicubic", "rgb", 30.123456, 0.9123456, std::nullopt},
      {"set5", 4, "jdsr", "rgb-crop4", 25.5, 0.75, 3.25}};
  const auto text = report::to_csv(rows);
  EXPECT_EQ(text,
            "dataset,scale,method,protocol,psnr,ssim,pi\n"
            "set5,2,bicubic,rgb,30.1235,0.912346,\n"
            "set5,4,jdsr,rgb-crop4,25.5000,0.750000,3.2500\n");
  const auto back = report::parse_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1], rows[1]);
  EXPECT_THROW(report::parse_csv("a,b\n"), DataError);
}

TEST(Report, TableLayouts) {
  const std::vector<report::ReportRow> rows = {
      {"set5", 2, "bicubic", "rgb", 30.0, 0.9, std::nullopt},
      {"set5", 2, "bicubic", "rgb-crop2", 31.0, 0.91, std::nullopt},
      {"set5", 2, "jdsr", "rgb", 32.0, 0.95, 2.5}};
  const auto t = report::render_table(rows, report::Layout::kPsnrSsim, "rgb");
  EXPECT_NE(t.find("30.00/0.9000"), std::string::npos) << t;
  EXPECT_EQ(t.find("31.00"), std::string::npos) << t;
  const auto p = report::render_table(rows, report::Layout::kPi, "rgb");
  EXPECT_NE(p.find("2.50"), std::string::npos) << p;
}
