#pragma once

// Model-based intermediate demosaicing used as the initial estimate refined by
// the pre-demosaicing network.

#include <cstddef>
#include <string_view>
#include <vector>

#include "jdsr/cfa.hpp"

namespace jdsr::demosaic {

struct DemosaicMethod {
  enum class Kind { kBilinear, kResidualRefine };
  Kind kind = Kind::kBilinear;
  int iterations = 2;  // residual-refine only

  static DemosaicMethod bilinear() { return {Kind::kBilinear, 1}; }
  static DemosaicMethod residual_refine(int iterations = 2);
  static DemosaicMethod parse(std::string_view name, int iterations);
  std::string_view name() const;
};

// Fills a colour plane whose samples are only meaningful at sites of colour
// `c`, using the bilinear Bayer stencils (2 or 4 same-colour taps). Borders are
// mirrored without repeating the edge sample so Bayer parity is kept.
std::vector<float> interpolate_sites(const std::vector<float>& values, const cfa::CfaFrame& layout,
                                     cfa::Channel c);

cfa::RgbImage bilinear_demosaic(const cfa::CfaFrame& cfa);

// Residual interpolation: starting from bilinear, each iteration rebuilds R and
// B as G + interpolated (R-G)/(B-G) residuals from native sites, then G as
// R/B + interpolated (G-R)/(G-B) residuals from native G sites.
cfa::RgbImage residual_refine_demosaic(const cfa::CfaFrame& cfa, int iterations);

cfa::RgbImage demosaic(const cfa::CfaFrame& cfa, const DemosaicMethod& method);

}  // namespace jdsr::demosaic
