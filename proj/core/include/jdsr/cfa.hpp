#pragma once

// Bayer CFA synthesis and representation: mosaicking, phase bookkeeping,
// channel expansion, bicubic resampling, patch sampling and augmentation.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jdsr/tensor.hpp"

namespace jdsr::cfa {

// Which 2x2 arrangement sits at pixel (0,0), read row-major.
enum class Phase : std::uint8_t { kRGGB, kGRBG, kGBRG, kBGGR };
inline constexpr std::array<Phase, 4> kAllPhases = {Phase::kRGGB, Phase::kGRBG, Phase::kGBRG,
                                                    Phase::kBGGR};

enum Channel : std::size_t { kRed = 0, kGreen = 1, kBlue = 2 };

std::string_view to_string(Phase phase);
// Accepts upper or lower case; throws DataError on anything else.
Phase parse_phase(std::string_view text);
// Colour sampled at (row, col) under `phase`.
Channel color_at(Phase phase, std::size_t row, std::size_t col);
// Inverse of color_at on the 2x2 tile; throws if the tile is not a Bayer tile.
Phase phase_from_tile(Channel c00, Channel c01, Channel c10, Channel c11);

// Planar H x W x 3 image, values nominally in [0,1].
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> planes;  // channel-major: planes[(c*H + y)*W + x]

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w, float fill = 0.0f);

  float& at(std::size_t c, std::size_t y, std::size_t x) { return planes[(c * height + y) * width + x]; }
  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return planes[(c * height + y) * width + x];
  }
  void clamp01();
  bool operator==(const RgbImage&) const = default;
};

struct CfaFrame {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> plane;  // plane[y*W + x]
  Phase phase = Phase::kRGGB;

  CfaFrame() = default;
  CfaFrame(std::size_t h, std::size_t w, Phase p, float fill = 0.0f);

  float& at(std::size_t y, std::size_t x) { return plane[y * width + x]; }
  float at(std::size_t y, std::size_t x) const { return plane[y * width + x]; }
  Channel color(std::size_t y, std::size_t x) const { return color_at(phase, y, x); }
  bool operator==(const CfaFrame&) const = default;
};

struct PatchPair {
  CfaFrame cfa;
  RgbImage hr;
  std::size_t cfa_row = 0;  // origin of the CFA patch in the LR mosaic
  std::size_t cfa_col = 0;
};

struct PatchBatch {
  std::vector<PatchPair> pairs;
  std::size_t size() const noexcept { return pairs.size(); }
};

// Samples one colour per pixel according to the phase's 2x2 tile.
CfaFrame mosaic(const RgbImage& img, Phase phase);

// Zero-padded [1,3,H,W] tensor: each position carries its sample in the channel
// its phase assigns and zero elsewhere.
template <typename T>
ad::Tensor<T> expand_three_channel(const CfaFrame& cfa);
// Raw mosaic as a [1,1,H,W] tensor.
template <typename T>
ad::Tensor<T> collapse_one_channel(const CfaFrame& cfa);

template <typename T>
ad::Tensor<T> to_tensor(const RgbImage& img);
// Stacks equally sized images into [N,3,H,W].
template <typename T>
ad::Tensor<T> stack(const std::vector<RgbImage>& images);
// Reads image `n` of a [N,3,H,W] tensor, clamping to [0,1].
template <typename T>
RgbImage from_tensor(const ad::Tensor<T>& t, std::size_t n = 0);

// Keys cubic (a = -0.5) resampling with edge clamping. When shrinking, the
// kernel is widened by the scale factor and weights are renormalised per
// output pixel. Output is clamped to [0,1].
RgbImage resize_bicubic(const RgbImage& img, std::size_t out_height, std::size_t out_width);
RgbImage bicubic_downsample(const RgbImage& img, std::size_t factor);
RgbImage bicubic_upsample(const RgbImage& img, std::size_t factor);

// Largest centred crop whose sides are multiples of `multiple`.
RgbImage center_crop_to_multiple(const RgbImage& img, std::size_t multiple);
RgbImage crop(const RgbImage& img, std::size_t row, std::size_t col, std::size_t h, std::size_t w);
CfaFrame crop(const CfaFrame& cfa, std::size_t row, std::size_t col, std::size_t h, std::size_t w);

// An HR image with its bicubic-downsampled, mosaicked LR counterpart.
struct TrainingExample {
  RgbImage hr;
  CfaFrame lr_cfa;
  std::size_t factor = 2;
};

// Crops `hr` to a multiple of 2*factor, downsamples and mosaics it.
TrainingExample prepare_example(const RgbImage& hr, std::size_t factor, Phase phase);

// Random even-aligned CFA patches of patch_size^2 with the co-located
// (factor*patch_size)^2 HR crops. Deterministic in `seed`.
PatchBatch sample_patches(const TrainingExample& example, std::size_t count, std::uint64_t seed,
                          std::size_t patch_size = 48);
PatchBatch sample_patches(const RgbImage& hr, std::size_t factor, std::size_t count,
                          std::uint64_t seed, std::size_t patch_size = 48,
                          Phase phase = Phase::kRGGB);

// Element of the dihedral group of the square: `flip` (mirror left-right)
// applied first, then `quarter_turns` counter-clockwise rotations.
struct Transform {
  bool flip = false;
  std::uint8_t quarter_turns = 0;

  static Transform from_index(std::size_t index);  // 0..7
  std::size_t index() const { return (flip ? 4 : 0) + quarter_turns; }
  Transform inverse() const;
  bool operator==(const Transform&) const = default;
};

RgbImage apply(const RgbImage& img, Transform t);
// Transforms the mosaic and relabels the phase to the arrangement now at (0,0).
CfaFrame apply(const CfaFrame& cfa, Transform t);

// Applies one uniformly drawn transform per pair, identically to both members.
PatchBatch augment(const PatchBatch& batch, std::uint64_t seed);

}  // namespace jdsr::cfa
