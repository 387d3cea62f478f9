#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "jdsr/cfa.hpp"
#include "jdsr/errors.hpp"
#include "jdsr/image_io.hpp"
#include "jdsr/random.hpp"

using namespace jdsr;
using namespace jdsr::cfa;

namespace {

RgbImage random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  for (auto& v : img.planes) v = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST(Cfa, PhaseTilesAndParsing) {
  EXPECT_EQ(color_at(Phase::kRGGB, 0, 0), kRed);
  EXPECT_EQ(color_at(Phase::kRGGB, 1, 1), kBlue);
  EXPECT_EQ(color_at(Phase::kGRBG, 0, 1), kRed);
  EXPECT_EQ(color_at(Phase::kGBRG, 0, 1), kBlue);
  EXPECT_EQ(color_at(Phase::kBGGR, 0, 0), kBlue);
  for (Phase p : kAllPhases) {
    EXPECT_EQ(parse_phase(to_string(p)), p);
    EXPECT_EQ(phase_from_tile(color_at(p, 0, 0), color_at(p, 0, 1), color_at(p, 1, 0),
                              color_at(p, 1, 1)),
              p);
    int greens = 0;
    for (std::size_t y = 0; y < 2; ++y)
      for (std::size_t x = 0; x < 2; ++x) greens += color_at(p, y, x) == kGreen;
    EXPECT_EQ(greens, 2);
  }
  EXPECT_EQ(parse_phase("grbg"), Phase::kGRBG);
  EXPECT_THROW(parse_phase("RGBG"), DataError);
  EXPECT_THROW(phase_from_tile(kRed, kRed, kGreen, kBlue), DataError);
}

TEST(Cfa, MosaicSamplesTheAssignedChannel) {
  const auto img = random_image(6, 8, 1);
  for (Phase p : kAllPhases) {
    const auto m = mosaic(img, p);
    for (std::size_t y = 0; y < 6; ++y)
      for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(m.at(y, x), img.at(color_at(p, y, x), y, x));
  }
  EXPECT_THROW(mosaic(RgbImage(5, 4), Phase::kRGGB), DimensionError);
}

TEST(Cfa, ExpandThreeChannelSumIsBitwiseIdentity) {
  const auto m = mosaic(random_image(8, 10, 2), Phase::kGBRG);
  const auto t = expand_three_channel<float>(m);
  ASSERT_EQ(t.shape(), (ad::Shape{1, 3, 8, 10}));
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t x = 0; x < 10; ++x) {
      const float s = t.at(0, 0, y, x) + t.at(0, 1, y, x) + t.at(0, 2, y, x);
      EXPECT_EQ(s, m.at(y, x));
      const std::size_t c = m.color(y, x);
      for (std::size_t k = 0; k < 3; ++k) {
        if (k != c) EXPECT_EQ(t.at(0, k, y, x), 0.0f);
      }
    }
  }
  const auto one = collapse_one_channel<double>(m);
  EXPECT_EQ(one.shape(), (ad::Shape{1, 1, 8, 10}));
  EXPECT_EQ(one.at(0, 0, 3, 4), static_cast<double>(m.at(3, 4)));
}

TEST(Cfa, BicubicPreservesConstantsAndRamps) {
  RgbImage c(12, 12, 0.37f);
  for (std::size_t f : {2u, 3u, 4u}) {
    for (float v : bicubic_downsample(c, f).planes) EXPECT_NEAR(v, 0.37f, 1e-7);
    for (float v : bicubic_upsample(c, f).planes) EXPECT_NEAR(v, 0.37f, 1e-7);
  }
  // Interior of an upsampled linear ramp is reproduced exactly by Keys cubic.
  const std::size_t n = 16, s = 2;
  RgbImage ramp(n, n);
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t y = 0; y < n; ++y)
      for (std::size_t x = 0; x < n; ++x) ramp.at(k, y, x) = 0.1f + 0.02f * x + 0.01f * y;
  const auto up = bicubic_upsample(ramp, s);
  for (std::size_t y = 2 * s; y + 2 * s < n * s; ++y) {
    for (std::size_t x = 2 * s; x + 2 * s < n * s; ++x) {
      const double sx = (x + 0.5) / s - 0.5, sy = (y + 0.5) / s - 0.5;
      EXPECT_NEAR(up.at(0, y, x), 0.1 + 0.02 * sx + 0.01 * sy, 1e-6);
    }
  }
}

TEST(Cfa, PrepareExampleCropsAndShrinks) {
  const auto hr = random_image(37, 50, 3);
  const auto ex = prepare_example(hr, 3, Phase::kBGGR);
  EXPECT_EQ(ex.hr.height % 6, 0u);
  EXPECT_EQ(ex.hr.width % 6, 0u);
  EXPECT_EQ(ex.lr_cfa.height * 3, ex.hr.height);
  EXPECT_EQ(ex.lr_cfa.width * 3, ex.hr.width);
  EXPECT_EQ(ex.lr_cfa.phase, Phase::kBGGR);
  EXPECT_THROW(prepare_example(RgbImage(4, 4), 4, Phase::kRGGB), DataError);
}

TEST(Cfa, PatchesAreAlignedDeterministicAndColocated) {
  const auto ex = prepare_example(random_image(64, 64, 4), 2, Phase::kRGGB);
  const auto a = sample_patches(ex, 5, 11, 8);
  const auto b = sample_patches(ex, 5, 11, 8);
  ASSERT_EQ(a.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& p = a.pairs[i];
    EXPECT_EQ(p.cfa, b.pairs[i].cfa);
    EXPECT_EQ(p.cfa_row % 2, 0u);
    EXPECT_EQ(p.cfa_col % 2, 0u);
    EXPECT_EQ(p.cfa.phase, Phase::kRGGB);
    EXPECT_EQ(p.cfa, crop(ex.lr_cfa, p.cfa_row, p.cfa_col, 8, 8));
    EXPECT_EQ(p.hr, crop(ex.hr, 2 * p.cfa_row, 2 * p.cfa_col, 16, 16));
  }
}

TEST(Cfa, TransformsFormAGroupAndRelabelPhase) {
  const auto img = random_image(6, 6, 5);
  std::set<std::vector<float>> distinct;
  for (std::size_t i = 0; i < 8; ++i) {
    const auto t = Transform::from_index(i);
    EXPECT_EQ(t.index(), i);
    EXPECT_EQ(apply(apply(img, t), t.inverse()), img);
    distinct.insert(apply(img, t).planes);
    // Mosaicking commutes with the transform once the phase is relabelled.
    const auto m = mosaic(img, Phase::kRGGB);
    const auto tm = apply(m, t);
    EXPECT_EQ(tm, mosaic(apply(img, t), tm.phase));
  }
  EXPECT_EQ(distinct.size(), 8u);
  EXPECT_THROW(Transform::from_index(8), DomainError);
}

TEST(Cfa, AugmentKeepsPairsConsistent) {
  const auto ex = prepare_example(random_image(48, 48, 6), 2, Phase::kRGGB);
  const auto batch = augment(sample_patches(ex, 16, 2, 8), 9);
  std::set<Phase> phases;
  for (const auto& p : batch.pairs) {
    phases.insert(p.cfa.phase);
    // The LR mosaic of the transformed HR crop equals the transformed mosaic.
    const auto lr = prepare_example(p.hr, 2, p.cfa.phase).lr_cfa;
    EXPECT_EQ(lr.height, p.cfa.height);
  }
  EXPECT_GT(phases.size(), 1u);
}

TEST(Cfa, SyntheticImagesAreDeterministicAndInRange) {
  const auto a = io::synthetic_image(16, 20, 3);
  const auto b = io::synthetic_image(16, 20, 3);
  const auto c = io::synthetic_image(16, 20, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (float v : a.planes) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
}
