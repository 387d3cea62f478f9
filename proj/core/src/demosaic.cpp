#include "jdsr/demosaic.hpp"

#include <string>

#include "jdsr/errors.hpp"

namespace jdsr::demosaic {

using cfa::CfaFrame;
using cfa::Channel;
using cfa::RgbImage;

DemosaicMethod DemosaicMethod::residual_refine(int iterations) {
  if (iterations < 1) throw DomainError("residual-refine demosaic needs iterations >= 1");
  return {Kind::kResidualRefine, iterations};
}

DemosaicMethod DemosaicMethod::parse(std::string_view name, int iterations) {
  if (name == "bilinear") return bilinear();
  if (name == "residual-refine") return residual_refine(iterations);
  throw DomainError("unknown demosaic method '" + std::string(name) + "'");
}

std::string_view DemosaicMethod::name() const {
  return kind == Kind::kBilinear ? "bilinear" : "residual-refine";
}

namespace {

std::size_t mirror(long i, std::size_t n) {
  const long last = static_cast<long>(n) - 1;
  if (i < 0) i = -i;
  if (i > last) i = 2 * last - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

std::vector<float> interpolate_sites(const std::vector<float>& values, const CfaFrame& layout,
                                     Channel c) {
  const std::size_t H = layout.height, W = layout.width;
  if (H < 2 || W < 2) throw DimensionError("demosaic: mosaic must be at least 2x2");
  if (values.size() != H * W) throw DimensionError("demosaic: plane size mismatch");
  auto v = [&](long y, long x) { return values[mirror(y, H) * W + mirror(x, W)]; };
  std::vector<float> out(H * W);
  for (std::size_t yy = 0; yy < H; ++yy) {
    for (std::size_t xx = 0; xx < W; ++xx) {
      const long y = static_cast<long>(yy), x = static_cast<long>(xx);
      const Channel here = layout.color(yy, xx);
      float r;
      if (here == c) {
        r = values[yy * W + xx];
      } else if (c == cfa::kGreen) {
        r = ((v(y - 1, x) + v(y + 1, x)) + (v(y, x - 1) + v(y, x + 1))) * 0.25f;
      } else if (here == cfa::kGreen) {
        if (layout.color(yy, xx + 1) == c) {
          r = (v(y, x - 1) + v(y, x + 1)) * 0.5f;
        } else {
          r = (v(y - 1, x) + v(y + 1, x)) * 0.5f;
        }
      } else {
        r = ((v(y - 1, x - 1) + v(y - 1, x + 1)) + (v(y + 1, x - 1) + v(y + 1, x + 1))) * 0.25f;
      }
      out[yy * W + xx] = r;
    }
  }
  return out;
}

namespace {

void set_plane(RgbImage& img, std::size_t c, const std::vector<float>& plane) {
  std::copy(plane.begin(), plane.end(), img.planes.begin() + static_cast<long>(c * plane.size()));
}

std::vector<float> get_plane(const RgbImage& img, std::size_t c) {
  const std::size_t n = img.height * img.width;
  return std::vector<float>(img.planes.begin() + static_cast<long>(c * n),
                            img.planes.begin() + static_cast<long>((c + 1) * n));
}

}  // namespace

RgbImage bilinear_demosaic(const CfaFrame& cfa) {
  RgbImage out(cfa.height, cfa.width);
  for (Channel c : {cfa::kRed, cfa::kGreen, cfa::kBlue}) {
    set_plane(out, c, interpolate_sites(cfa.plane, cfa, c));
  }
  return out;
}

RgbImage residual_refine_demosaic(const CfaFrame& cfa, int iterations) {
  if (iterations < 1) throw DomainError("residual-refine demosaic needs iterations >= 1");
  RgbImage est = bilinear_demosaic(cfa);
  const std::size_t n = cfa.height * cfa.width;
  for (int it = 0; it < iterations; ++it) {
    const auto green = get_plane(est, cfa::kGreen);
    // Chroma from G plus chroma-minus-green residuals measured at native sites.
    for (Channel c : {cfa::kRed, cfa::kBlue}) {
      std::vector<float> residual(n, 0.0f);
      for (std::size_t i = 0; i < n; ++i) {
        if (cfa.color(i / cfa.width, i % cfa.width) == c) residual[i] = cfa.plane[i] - green[i];
      }
      const auto filled = interpolate_sites(residual, cfa, c);
      std::vector<float> plane(n);
      for (std::size_t i = 0; i < n; ++i) {
        plane[i] = cfa.color(i / cfa.width, i % cfa.width) == c ? cfa.plane[i] : green[i] + filled[i];
      }
      set_plane(est, c, plane);
    }
    // Green from chroma plus green-minus-chroma residuals measured at native G sites.
    std::vector<float> new_green = green;
    for (Channel c : {cfa::kRed, cfa::kBlue}) {
      const auto chroma = get_plane(est, c);
      std::vector<float> residual(n, 0.0f);
      for (std::size_t i = 0; i < n; ++i) {
        if (cfa.color(i / cfa.width, i % cfa.width) == cfa::kGreen) residual[i] = cfa.plane[i] - chroma[i];
      }
      const auto filled = interpolate_sites(residual, cfa, cfa::kGreen);
      for (std::size_t i = 0; i < n; ++i) {
        if (cfa.color(i / cfa.width, i % cfa.width) == c) new_green[i] = cfa.plane[i] + filled[i];
      }
    }
    set_plane(est, cfa::kGreen, new_green);
  }
  est.clamp01();
  return est;
}

RgbImage demosaic(const CfaFrame& cfa, const DemosaicMethod& method) {
  switch (method.kind) {
    case DemosaicMethod::Kind::kBilinear: return bilinear_demosaic(cfa);
    case DemosaicMethod::Kind::kResidualRefine: return residual_refine_demosaic(cfa, method.iterations);
  }
  throw DomainError("unknown demosaic method");
}

}  // namespace jdsr::demosaic
