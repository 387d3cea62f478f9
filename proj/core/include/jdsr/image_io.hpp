#pragma once

// PNG/PPM reading and writing for RGB images and 16-bit CFA mosaics.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "jdsr/cfa.hpp"

namespace jdsr::io {

// 8/16-bit grayscale, RGB, palette or alpha PNG (alpha dropped), or binary PPM.
cfa::RgbImage read_image(const std::filesystem::path& path);
// 8-bit RGB PNG, values rounded from [0,1].
void write_png(const std::filesystem::path& path, const cfa::RgbImage& img);

// 16-bit grayscale PNG holding round(v * 65535).
void write_cfa(const std::filesystem::path& path, const cfa::CfaFrame& cfa);
// 8 or 16-bit grayscale PNG; the phase comes from the caller (usually the sidecar).
cfa::CfaFrame read_cfa(const std::filesystem::path& path, cfa::Phase phase);

// *.png and *.ppm files in `dir`, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

// Smooth sum-of-sinusoids test image in [0.1, 0.9], deterministic in `seed`.
cfa::RgbImage synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed);

}  // namespace jdsr::io
