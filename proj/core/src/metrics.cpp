#include "jdsr/metrics.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "jdsr/errors.hpp"

namespace jdsr::metrics {

using cfa::RgbImage;

SsimMode parse_ssim_mode(const std::string& name) {
  if (name == "rgb") return SsimMode::kRgbMean;
  if (name == "luminance" || name == "y") return SsimMode::kLuminance;
  throw ConfigError("metrics.ssim_mode", "unknown mode '" + name + "' (expected rgb or luminance)");
}

std::string to_string(SsimMode mode) { return mode == SsimMode::kRgbMean ? "rgb" : "luminance"; }

std::string Protocol::label() const {
  std::string s = ssim_mode == SsimMode::kRgbMean ? "rgb" : "y";
  if (crop_border > 0) s += "-crop" + std::to_string(crop_border);
  return s;
}

namespace {

void check_same(const RgbImage& a, const RgbImage& b, const char* what) {
  if (a.height != b.height || a.width != b.width) {
    throw DimensionError(std::string(what) + ": image sizes " + std::to_string(a.height) + "x" +
                         std::to_string(a.width) + " and " + std::to_string(b.height) + "x" +
                         std::to_string(b.width) + " differ");
  }
}

constexpr std::size_t kWindow = 11;

std::vector<double> gaussian_window() {
  std::vector<double> g(kWindow);
  double total = 0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += g[i];
  }
  for (auto& v : g) v /= total;
  return g;
}

// Separable valid-region filtering.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& g) {
  const std::size_t ho = h - kWindow + 1, wo = w - kWindow + 1;
  std::vector<double> rows(h * wo);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * src[y * w + x + k];
      rows[y * wo + x] = acc;
    }
  }
  std::vector<double> out(ho * wo);
  for (std::size_t y = 0; y < ho; ++y) {
    for (std::size_t x = 0; x < wo; ++x) {
      double acc = 0;
      for (std::size_t k = 0; k < kWindow; ++k) acc += g[k] * rows[(y + k) * wo + x];
      out[y * wo + x] = acc;
    }
  }
  return out;
}

}  // namespace

double mse(const RgbImage& a, const RgbImage& b) {
  check_same(a, b, "mse");
  if (a.planes.empty()) throw DimensionError("mse: empty images");
  double acc = 0;
  for (std::size_t i = 0; i < a.planes.size(); ++i) {
    const double d = static_cast<double>(a.planes[i]) - static_cast<double>(b.planes[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.planes.size());
}

double psnr(const RgbImage& a, const RgbImage& b, double peak) {
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

double ssim_plane(const double* a, const double* b, std::size_t h, std::size_t w, double peak) {
  if (h < kWindow || w < kWindow) {
    throw DimensionError("ssim: images must be at least 11x11, got " + std::to_string(h) + "x" +
                         std::to_string(w));
  }
  static const std::vector<double> g = gaussian_window();
  const std::size_t n = h * w;
  std::vector<double> va(a, a + n), vb(b, b + n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = va[i] * va[i];
    bb[i] = vb[i] * vb[i];
    ab[i] = va[i] * vb[i];
  }
  const auto mu_a = filter_valid(va, h, w, g);
  const auto mu_b = filter_valid(vb, h, w, g);
  const auto s_aa = filter_valid(aa, h, w, g);
  const auto s_bb = filter_valid(bb, h, w, g);
  const auto s_ab = filter_valid(ab, h, w, g);
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  double acc = 0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double var_a = s_aa[i] - ma * ma;
    const double var_b = s_bb[i] - mb * mb;
    const double cov = s_ab[i] - ma * mb;
    acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
  }
  return acc / static_cast<double>(mu_a.size());
}

double luminance(double r, double g, double b) {
  return (16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
}

double ssim(const RgbImage& a, const RgbImage& b, SsimMode mode, double peak) {
  check_same(a, b, "ssim");
  const std::size_t h = a.height, w = a.width, n = h * w;
  if (mode == SsimMode::kLuminance) {
    std::vector<double> ya(n), yb(n);
    for (std::size_t i = 0; i < n; ++i) {
      ya[i] = luminance(a.planes[i], a.planes[n + i], a.planes[2 * n + i]);
      yb[i] = luminance(b.planes[i], b.planes[n + i], b.planes[2 * n + i]);
    }
    return ssim_plane(ya.data(), yb.data(), h, w, peak);
  }
  double acc = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<double> pa(a.planes.begin() + c * n, a.planes.begin() + (c + 1) * n);
    std::vector<double> pb(b.planes.begin() + c * n, b.planes.begin() + (c + 1) * n);
    acc += ssim_plane(pa.data(), pb.data(), h, w, peak);
  }
  return acc / 3.0;
}

double pi_score(double ma, double niqe) { return ((10.0 - ma) + niqe) / 2.0; }

RgbImage crop_border(const RgbImage& img, std::size_t border) {
  if (border == 0) return img;
  if (2 * border >= img.height || 2 * border >= img.width) {
    throw DimensionError("crop_border: border " + std::to_string(border) + " leaves no pixels");
  }
  return cfa::crop(img, border, border, img.height - 2 * border, img.width - 2 * border);
}

MetricScores evaluate(const RgbImage& sr, const RgbImage& hr, const Protocol& protocol,
                      const std::optional<NoReferenceScores>& nr) {
  check_same(sr, hr, "evaluate");
  const auto a = crop_border(sr, protocol.crop_border);
  const auto b = crop_border(hr, protocol.crop_border);
  MetricScores s;
  s.psnr = psnr(a, b);
  s.ssim = ssim(a, b, protocol.ssim_mode);
  if (nr) {
    s.ma = nr->ma;
    s.niqe = nr->niqe;
    s.pi = pi_score(nr->ma, nr->niqe);
  }
  return s;
}

std::map<std::string, NoReferenceScores> read_score_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score sidecar " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty score sidecar");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image_id,ma,niqe") {
    throw DataError(path.string() + ": expected header 'image_id,ma,niqe', got '" + line + "'");
  }
  std::map<std::string, NoReferenceScores> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, ma, niqe;
    if (!std::getline(ss, id, ',') || !std::getline(ss, ma, ',') || !std::getline(ss, niqe)) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    try {
      std::size_t p1 = 0, p2 = 0;
      NoReferenceScores s{std::stod(ma, &p1), std::stod(niqe, &p2)};
      if (p1 != ma.size() || p2 != niqe.size()) throw std::invalid_argument("trailing");
      if (!std::isfinite(s.ma) || !std::isfinite(s.niqe)) throw std::invalid_argument("finite");
      out[id] = s;
    } catch (const std::logic_error&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed score");
    }
  }
  return out;
}

}  // namespace jdsr::metrics
