#pragma once

// Full-reference image quality (PSNR, SSIM) and the perceptual index built from
// externally computed no-reference scores.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "jdsr/cfa.hpp"

namespace jdsr::metrics {

enum class SsimMode { kRgbMean, kLuminance };
SsimMode parse_ssim_mode(const std::string& name);
std::string to_string(SsimMode mode);

struct Protocol {
  std::size_t crop_border = 0;  // pixels dropped on each side before scoring
  SsimMode ssim_mode = SsimMode::kRgbMean;

  // e.g. "rgb", "rgb-crop4", "y-crop2"
  std::string label() const;
};

double mse(const cfa::RgbImage& a, const cfa::RgbImage& b);
// 10 log10(peak^2 / MSE); +infinity for identical images.
double psnr(const cfa::RgbImage& a, const cfa::RgbImage& b, double peak = 1.0);

// Mean SSIM of one plane over all fully covered 11x11 Gaussian windows
// (sigma 1.5, K1 0.01, K2 0.03).
double ssim_plane(const double* a, const double* b, std::size_t height, std::size_t width,
                  double peak = 1.0);
double ssim(const cfa::RgbImage& a, const cfa::RgbImage& b, SsimMode mode = SsimMode::kRgbMean,
            double peak = 1.0);

// Y of ITU-R BT.601 studio range, rescaled to [0,1].
double luminance(double r, double g, double b);

double pi_score(double ma, double niqe);

cfa::RgbImage crop_border(const cfa::RgbImage& img, std::size_t border);

struct NoReferenceScores {
  double ma = 0;
  double niqe = 0;
};

struct MetricScores {
  double psnr = 0;
  double ssim = 0;
  std::optional<double> ma;
  std::optional<double> niqe;
  std::optional<double> pi;
};

MetricScores evaluate(const cfa::RgbImage& sr, const cfa::RgbImage& hr, const Protocol& protocol,
                      const std::optional<NoReferenceScores>& nr = std::nullopt);

// Reads `image_id,ma,niqe` rows (with that header).
std::map<std::string, NoReferenceScores> read_score_sidecar(const std::filesystem::path& path);

}  // namespace jdsr::metrics
