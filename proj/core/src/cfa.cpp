#include "jdsr/cfa.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "jdsr/errors.hpp"
#include "jdsr/random.hpp"

namespace jdsr::cfa {

namespace {

// Row-major 2x2 tiles.
constexpr std::array<std::array<Channel, 4>, 4> kTiles = {{
    {kRed, kGreen, kGreen, kBlue},   // RGGB
    {kGreen, kRed, kBlue, kGreen},   // GRBG
    {kGreen, kBlue, kRed, kGreen},   // GBRG
    {kBlue, kGreen, kGreen, kRed},   // BGGR
}};

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kRGGB: return "RGGB";
    case Phase::kGRBG: return "GRBG";
    case Phase::kGBRG: return "GBRG";
    case Phase::kBGGR: return "BGGR";
  }
  return "?";
}

Phase parse_phase(std::string_view text) {
  std::string upper(text);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (Phase p : kAllPhases) {
    if (upper == to_string(p)) return p;
  }
  throw DataError("unknown Bayer phase '" + std::string(text) + "'");
}

Channel color_at(Phase phase, std::size_t row, std::size_t col) {
  return kTiles[static_cast<std::size_t>(phase)][(row & 1) * 2 + (col & 1)];
}

Phase phase_from_tile(Channel c00, Channel c01, Channel c10, Channel c11) {
  for (Phase p : kAllPhases) {
    const auto& t = kTiles[static_cast<std::size_t>(p)];
    if (t[0] == c00 && t[1] == c01 && t[2] == c10 && t[3] == c11) return p;
  }
  throw DataError("2x2 tile is not a Bayer arrangement");
}

RgbImage::RgbImage(std::size_t h, std::size_t w, float fill)
    : height(h), width(w), planes(3 * h * w, fill) {}

void RgbImage::clamp01() {
  for (auto& v : planes) v = std::clamp(v, 0.0f, 1.0f);
}

CfaFrame::CfaFrame(std::size_t h, std::size_t w, Phase p, float fill)
    : height(h), width(w), plane(h * w, fill), phase(p) {}

CfaFrame mosaic(const RgbImage& img, Phase phase) {
  if (img.height % 2 != 0 || img.width % 2 != 0) {
    throw DimensionError("mosaic: image dimensions must be even, got " +
                         std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  CfaFrame out(img.height, img.width, phase);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) out.at(y, x) = img.at(color_at(phase, y, x), y, x);
  }
  return out;
}

template <typename T>
ad::Tensor<T> expand_three_channel(const CfaFrame& cfa) {
  ad::Tensor<T> out({1, 3, cfa.height, cfa.width});
  for (std::size_t y = 0; y < cfa.height; ++y) {
    for (std::size_t x = 0; x < cfa.width; ++x) {
      out.at(0, cfa.color(y, x), y, x) = static_cast<T>(cfa.at(y, x));
    }
  }
  return out;
}

template <typename T>
ad::Tensor<T> collapse_one_channel(const CfaFrame& cfa) {
  return ad::Tensor<T>({1, 1, cfa.height, cfa.width},
                       std::vector<T>(cfa.plane.begin(), cfa.plane.end()));
}

template <typename T>
ad::Tensor<T> to_tensor(const RgbImage& img) {
  return ad::Tensor<T>({1, 3, img.height, img.width},
                       std::vector<T>(img.planes.begin(), img.planes.end()));
}

template <typename T>
ad::Tensor<T> stack(const std::vector<RgbImage>& images) {
  if (images.empty()) throw DimensionError("stack: no images");
  const std::size_t h = images[0].height, w = images[0].width;
  std::vector<T> values;
  values.reserve(images.size() * 3 * h * w);
  for (const auto& im : images) {
    if (im.height != h || im.width != w) throw DimensionError("stack: image sizes differ");
    values.insert(values.end(), im.planes.begin(), im.planes.end());
  }
  return ad::Tensor<T>({images.size(), 3, h, w}, std::move(values));
}

template <typename T>
RgbImage from_tensor(const ad::Tensor<T>& t, std::size_t n) {
  if (t.rank() != 4 || t.dim(1) != 3 || n >= t.dim(0)) {
    throw DimensionError("from_tensor: expected [N,3,H,W] tensor, got " + ad::to_string(t.shape()));
  }
  RgbImage img(t.dim(2), t.dim(3));
  auto d = t.data();
  const std::size_t len = 3 * img.height * img.width;
  for (std::size_t i = 0; i < len; ++i) {
    img.planes[i] = std::clamp(static_cast<float>(d[n * len + i]), 0.0f, 1.0f);
  }
  return img;
}

namespace {

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x <= 1.0) return (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0;
  if (x < 2.0) return a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::vector<std::size_t> index;
  std::vector<double> weight;
};

// Per-output-sample source indices and normalised weights along one axis.
std::vector<Taps> axis_taps(std::size_t in_len, std::size_t out_len) {
  const double scale = static_cast<double>(out_len) / static_cast<double>(in_len);
  const double stretch = scale < 1.0 ? 1.0 / scale : 1.0;
  const double support = 2.0 * stretch;
  std::vector<Taps> taps(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double center = (static_cast<double>(i) + 0.5) / scale - 0.5;
    const auto first = static_cast<long>(std::floor(center - support));
    const auto last = static_cast<long>(std::ceil(center + support));
    double total = 0;
    for (long k = first; k <= last; ++k) {
      const double w = keys_cubic((center - static_cast<double>(k)) / stretch);
      if (w == 0.0) continue;
      const long clamped = std::clamp<long>(k, 0, static_cast<long>(in_len) - 1);
      taps[i].index.push_back(static_cast<std::size_t>(clamped));
      taps[i].weight.push_back(w);
      total += w;
    }
    for (auto& w : taps[i].weight) w /= total;
  }
  return taps;
}

}  // namespace

RgbImage resize_bicubic(const RgbImage& img, std::size_t out_height, std::size_t out_width) {
  if (img.height == 0 || img.width == 0 || out_height == 0 || out_width == 0) {
    throw DimensionError("resize_bicubic: empty image");
  }
  const auto row_taps = axis_taps(img.height, out_height);
  const auto col_taps = axis_taps(img.width, out_width);
  RgbImage out(out_height, out_width);
  std::vector<double> tmp(img.height * out_width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < img.height; ++y) {
      for (std::size_t x = 0; x < out_width; ++x) {
        const auto& t = col_taps[x];
        double acc = 0;
        for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * img.at(c, y, t.index[k]);
        tmp[y * out_width + x] = acc;
      }
    }
    for (std::size_t y = 0; y < out_height; ++y) {
      const auto& t = row_taps[y];
      for (std::size_t x = 0; x < out_width; ++x) {
        double acc = 0;
        for (std::size_t k = 0; k < t.index.size(); ++k) acc += t.weight[k] * tmp[t.index[k] * out_width + x];
        out.at(c, y, x) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

RgbImage bicubic_downsample(const RgbImage& img, std::size_t factor) {
  if (factor < 2 || factor > 4) {
    throw DimensionError("bicubic_downsample: factor must be 2, 3 or 4");
  }
  if (img.height % factor != 0 || img.width % factor != 0) {
    throw DimensionError("bicubic_downsample: " + std::to_string(img.height) + "x" +
                         std::to_string(img.width) + " not divisible by " +
                         std::to_string(factor));
  }
  return resize_bicubic(img, img.height / factor, img.width / factor);
}

RgbImage bicubic_upsample(const RgbImage& img, std::size_t factor) {
  return resize_bicubic(img, img.height * factor, img.width * factor);
}

RgbImage crop(const RgbImage& img, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  if (row + h > img.height || col + w > img.width) throw DimensionError("crop: window outside image");
  RgbImage out(h, w);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, row + y, col + x);
    }
  }
  return out;
}

CfaFrame crop(const CfaFrame& cfa, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  if (row + h > cfa.height || col + w > cfa.width) throw DimensionError("crop: window outside mosaic");
  const Phase phase = phase_from_tile(cfa.color(row, col), cfa.color(row, col + 1),
                                      cfa.color(row + 1, col), cfa.color(row + 1, col + 1));
  CfaFrame out(h, w, phase);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out.at(y, x) = cfa.at(row + y, col + x);
  }
  return out;
}

RgbImage center_crop_to_multiple(const RgbImage& img, std::size_t multiple) {
  const std::size_t h = img.height / multiple * multiple;
  const std::size_t w = img.width / multiple * multiple;
  if (h == 0 || w == 0) {
    throw DataError("image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                    " is smaller than " + std::to_string(multiple));
  }
  if (h == img.height && w == img.width) return img;
  return crop(img, (img.height - h) / 2, (img.width - w) / 2, h, w);
}

TrainingExample prepare_example(const RgbImage& hr, std::size_t factor, Phase phase) {
  TrainingExample ex;
  ex.factor = factor;
  ex.hr = center_crop_to_multiple(hr, 2 * factor);
  ex.lr_cfa = mosaic(bicubic_downsample(ex.hr, factor), phase);
  return ex;
}

PatchBatch sample_patches(const TrainingExample& example, std::size_t count, std::uint64_t seed,
                          std::size_t patch_size) {
  const auto& lr = example.lr_cfa;
  if (patch_size == 0 || patch_size % 2 != 0) {
    throw DimensionError("sample_patches: patch size must be even and positive");
  }
  if (lr.height < patch_size || lr.width < patch_size) {
    throw DataError("sample_patches: LR mosaic " + std::to_string(lr.height) + "x" +
                    std::to_string(lr.width) + " smaller than patch " + std::to_string(patch_size));
  }
  Rng rng(seed);
  const std::size_t f = example.factor;
  PatchBatch batch;
  batch.pairs.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t row = 2 * rng.below((lr.height - patch_size) / 2 + 1);
    const std::size_t col = 2 * rng.below((lr.width - patch_size) / 2 + 1);
    PatchPair pair;
    pair.cfa = crop(lr, row, col, patch_size, patch_size);
    pair.hr = crop(example.hr, f * row, f * col, f * patch_size, f * patch_size);
    pair.cfa_row = row;
    pair.cfa_col = col;
    batch.pairs.push_back(std::move(pair));
  }
  return batch;
}

PatchBatch sample_patches(const RgbImage& hr, std::size_t factor, std::size_t count,
                          std::uint64_t seed, std::size_t patch_size, Phase phase) {
  return sample_patches(prepare_example(hr, factor, phase), count, seed, patch_size);
}

Transform Transform::from_index(std::size_t index) {
  if (index > 7) throw DomainError("Transform::from_index: index must be in [0,8)");
  return Transform{index >= 4, static_cast<std::uint8_t>(index % 4)};
}

Transform Transform::inverse() const {
  // flip-then-rotate elements are reflections and therefore involutions.
  if (flip) return *this;
  return Transform{false, static_cast<std::uint8_t>((4 - quarter_turns) % 4)};
}

namespace {

template <typename V>
std::vector<V> flip_plane(const std::vector<V>& src, std::size_t h, std::size_t w) {
  std::vector<V> out(src.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) out[y * w + x] = src[y * w + (w - 1 - x)];
  }
  return out;
}

// One counter-clockwise quarter turn; the result is w x h.
template <typename V>
std::vector<V> rotate_plane(const std::vector<V>& src, std::size_t h, std::size_t w) {
  std::vector<V> out(src.size());
  for (std::size_t i = 0; i < w; ++i) {
    for (std::size_t j = 0; j < h; ++j) out[i * h + j] = src[j * w + (w - 1 - i)];
  }
  return out;
}

template <typename V>
std::vector<V> transform_plane(std::vector<V> plane, std::size_t& h, std::size_t& w, Transform t) {
  if (t.flip) plane = flip_plane(plane, h, w);
  for (std::uint8_t k = 0; k < t.quarter_turns; ++k) {
    plane = rotate_plane(plane, h, w);
    std::swap(h, w);
  }
  return plane;
}

}  // namespace

RgbImage apply(const RgbImage& img, Transform t) {
  RgbImage out;
  const std::size_t hw = img.height * img.width;
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t h = img.height, w = img.width;
    std::vector<float> plane(img.planes.begin() + static_cast<long>(c * hw),
                             img.planes.begin() + static_cast<long>((c + 1) * hw));
    plane = transform_plane(std::move(plane), h, w, t);
    out.height = h;
    out.width = w;
    out.planes.insert(out.planes.end(), plane.begin(), plane.end());
  }
  return out;
}

CfaFrame apply(const CfaFrame& cfa, Transform t) {
  if (cfa.height % 2 != 0 || cfa.width % 2 != 0) {
    throw DimensionError("apply: mosaic dimensions must be even");
  }
  std::size_t h = cfa.height, w = cfa.width;
  std::vector<Channel> labels(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) labels[y * w + x] = cfa.color(y, x);
  }
  CfaFrame out;
  out.plane = transform_plane(cfa.plane, h, w, t);
  std::size_t lh = cfa.height, lw = cfa.width;
  labels = transform_plane(std::move(labels), lh, lw, t);
  out.height = h;
  out.width = w;
  out.phase = phase_from_tile(labels[0], labels[1], labels[w], labels[w + 1]);
  return out;
}

PatchBatch augment(const PatchBatch& batch, std::uint64_t seed) {
  Rng rng(seed);
  PatchBatch out;
  out.pairs.reserve(batch.size());
  for (const auto& pair : batch.pairs) {
    if (pair.cfa.height != pair.cfa.width || pair.hr.height != pair.hr.width) {
      throw DimensionError("augment: patches must be square");
    }
    const Transform t = Transform::from_index(rng.below(8));
    PatchPair p;
    p.cfa = apply(pair.cfa, t);
    p.hr = apply(pair.hr, t);
    p.cfa_row = pair.cfa_row;
    p.cfa_col = pair.cfa_col;
    out.pairs.push_back(std::move(p));
  }
  return out;
}

template ad::Tensor<float> expand_three_channel<float>(const CfaFrame&);
template ad::Tensor<double> expand_three_channel<double>(const CfaFrame&);
template ad::Tensor<float> collapse_one_channel<float>(const CfaFrame&);
template ad::Tensor<double> collapse_one_channel<double>(const CfaFrame&);
template ad::Tensor<float> to_tensor<float>(const RgbImage&);
template ad::Tensor<double> to_tensor<double>(const RgbImage&);
template ad::Tensor<float> stack<float>(const std::vector<RgbImage>&);
template ad::Tensor<double> stack<double>(const std::vector<RgbImage>&);
template RgbImage from_tensor<float>(const ad::Tensor<float>&, std::size_t);
template RgbImage from_tensor<double>(const ad::Tensor<double>&, std::size_t);

}  // namespace jdsr::cfa
