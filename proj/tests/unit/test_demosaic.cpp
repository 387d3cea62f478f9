#include <gtest/gtest.h>

#include <cmath>

#include "jdsr/demosaic.hpp"
#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"

using namespace jdsr;
using namespace jdsr::cfa;
using namespace jdsr::demosaic;

namespace {

RgbImage constant(std::size_t h, std::size_t w, float r, float g, float b) {
  RgbImage img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(0, y, x) = r;
      img.at(1, y, x) = g;
      img.at(2, y, x) = b;
    }
  }
  return img;
}

}  // namespace

TEST(Demosaic, ConstantsAreExactForEveryPhaseAndMethod) {
  const auto img = constant(10, 12, 0.2f, 0.55f, 0.9f);
  for (Phase p : kAllPhases) {
    EXPECT_EQ(bilinear_demosaic(mosaic(img, p)), img) << to_string(p);
    const auto refined = residual_refine_demosaic(mosaic(img, p), 3);
    for (std::size_t i = 0; i < img.planes.size(); ++i) {
      EXPECT_NEAR(refined.planes[i], img.planes[i], 1e-6);
    }
  }
}

TEST(Demosaic, NativeSamplesAreKept) {
  const auto img = io::synthetic_image(16, 16, 8);
  for (Phase p : kAllPhases) {
    const auto m = mosaic(img, p);
    const auto out = bilinear_demosaic(m);
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 16; ++x) EXPECT_EQ(out.at(m.color(y, x), y, x), m.at(y, x));
  }
}

TEST(Demosaic, BilinearReproducesLinearRampsInside) {
  RgbImage img(12, 12);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 12; ++y)
      for (std::size_t x = 0; x < 12; ++x) img.at(c, y, x) = 0.05f * c + 0.03f * x + 0.02f * y;
  const auto out = bilinear_demosaic(mosaic(img, Phase::kGRBG));
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 1; y < 11; ++y)
      for (std::size_t x = 1; x < 11; ++x) EXPECT_NEAR(out.at(c, y, x), img.at(c, y, x), 1e-6);
}

TEST(Demosaic, ResidualRefineWinsWhenChannelsAreCorrelated) {
  // Shared high-frequency texture with smooth colour differences.
  RgbImage img(64, 64);
  for (std::size_t y = 0; y < 64; ++y) {
    for (std::size_t x = 0; x < 64; ++x) {
      const float t = 0.5f + 0.3f * std::sin(1.3f * x + 0.4f * y) * std::cos(0.9f * y);
      img.at(0, y, x) = t + 0.1f * std::sin(0.05f * x);
      img.at(1, y, x) = t;
      img.at(2, y, x) = t - 0.08f;
    }
  }
  const auto m = mosaic(img, Phase::kRGGB);
  auto err = [&](const RgbImage& out) {
    double e = 0;
    for (std::size_t i = 0; i < img.planes.size(); ++i) e += std::abs(out.planes[i] - img.planes[i]);
    return e;
  };
  EXPECT_LE(err(residual_refine_demosaic(m, 2)), err(bilinear_demosaic(m)));
}

TEST(Demosaic, MethodParsing) {
  EXPECT_EQ(DemosaicMethod::parse("bilinear", 1).kind, DemosaicMethod::Kind::kBilinear);
  const auto r = DemosaicMethod::parse("residual-refine", 3);
  EXPECT_EQ(r.kind, DemosaicMethod::Kind::kResidualRefine);
  EXPECT_EQ(r.iterations, 3);
  EXPECT_EQ(r.name(), "residual-refine");
  EXPECT_ANY_THROW(DemosaicMethod::parse("ahd", 1));
}
