#include "jdsr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "jdsr/errors.hpp"
#include "jdsr/random.hpp"

namespace jdsr::io {

using cfa::CfaFrame;
using cfa::RgbImage;
namespace fs = std::filesystem;

namespace {

struct File {
  std::FILE* f = nullptr;
  File(const fs::path& p, const char* mode) : f(std::fopen(p.c_str(), mode)) {}
  ~File() {
    if (f) std::fclose(f);
  }
  File(const File&) = delete;
  File& operator=(const File&) = delete;
};

// Decoded PNG samples, 1 or 3 channels, normalised to [0,1].
struct Decoded {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<float> samples;  // interleaved
};

bool decode_png(std::FILE* fp, Decoded& out, std::vector<png_byte>& raw,
                std::vector<png_bytep>& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const std::size_t h = png_get_image_height(png, info);
  const std::size_t w = png_get_image_width(png, info);
  const std::size_t ch = png_get_channels(png, info);
  const int bits = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.assign(h * stride, 0);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  out.height = h;
  out.width = w;
  out.channels = ch;
  out.samples.resize(h * w * ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t i = 0; i < w * ch; ++i) {
      float v;
      if (bits == 16) {
        const png_byte* p = rows[y] + 2 * i;
        v = static_cast<float>((p[0] << 8) | p[1]) / 65535.0f;
      } else {
        v = static_cast<float>(rows[y][i]) / 255.0f;
      }
      out.samples[y * w * ch + i] = v;
    }
  }
  return true;
}

Decoded read_png(const fs::path& path) {
  File file(path, "rb");
  if (!file.f) throw DataError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.f) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DataError(path.string() + ": not a PNG file");
  }
  std::fseek(file.f, 0, SEEK_SET);
  Decoded d;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  if (!decode_png(file.f, d, raw, rows)) throw DataError(path.string() + ": corrupt PNG");
  if (d.channels != 1 && d.channels != 3) {
    throw DataError(path.string() + ": unsupported channel count " + std::to_string(d.channels));
  }
  return d;
}

bool encode_png(std::FILE* fp, std::size_t h, std::size_t w, int color, int depth,
                std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_rows(const fs::path& path, std::size_t h, std::size_t w, int color, int depth,
                std::vector<png_byte>& raw, std::size_t stride) {
  std::vector<png_bytep> rows(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raw.data() + y * stride;
  bool ok;
  {
    File file(path, "wb");
    if (!file.f) throw DataError("cannot write " + path.string());
    ok = encode_png(file.f, h, w, color, depth, rows);
    ok = ok && std::fflush(file.f) == 0;
  }
  if (!ok) throw DataError("failed writing PNG " + path.string());
}

std::string lower_ext(const fs::path& p) {
  auto e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

RgbImage read_ppm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  auto skip = [&in] {
    while (true) {
      in >> std::ws;
      if (in.peek() != '#') break;
      std::string comment;
      std::getline(in, comment);
    }
  };
  in >> magic;
  skip();
  in >> w;
  skip();
  in >> h;
  skip();
  in >> maxval;
  in.get();
  if (magic != "P6" || !in || w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw DataError(path.string() + ": unsupported or malformed PPM");
  }
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(w * h * 3 * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw DataError(path.string() + ": truncated PPM");
  RgbImage img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t i = (y * w + x) * 3 + c;
        const double v = bytes == 2 ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
        img.at(c, y, x) = static_cast<float>(v / static_cast<double>(maxval));
      }
    }
  }
  return img;
}

}  // namespace

RgbImage read_image(const fs::path& path) {
  if (!fs::exists(path)) throw DataError("no such file: " + path.string());
  if (lower_ext(path) == ".ppm") return read_ppm(path);
  const auto d = read_png(path);
  RgbImage img(d.height, d.width);
  for (std::size_t y = 0; y < d.height; ++y) {
    for (std::size_t x = 0; x < d.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t src = d.channels == 1 ? 0 : c;
        img.at(c, y, x) = d.samples[(y * d.width + x) * d.channels + src];
      }
    }
  }
  return img;
}

void write_png(const fs::path& path, const RgbImage& img) {
  if (img.height == 0 || img.width == 0) throw DataError("write_png: empty image");
  const std::size_t stride = img.width * 3;
  std::vector<png_byte> raw(img.height * stride);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(img.at(c, y, x), 0.0f, 1.0f);
        raw[y * stride + x * 3 + c] = static_cast<png_byte>(std::lround(v * 255.0f));
      }
    }
  }
  write_rows(path, img.height, img.width, PNG_COLOR_TYPE_RGB, 8, raw, stride);
}

void write_cfa(const fs::path& path, const CfaFrame& cfa) {
  if (cfa.height == 0 || cfa.width == 0) throw DataError("write_cfa: empty mosaic");
  const std::size_t stride = cfa.width * 2;
  std::vector<png_byte> raw(cfa.height * stride);
  for (std::size_t y = 0; y < cfa.height; ++y) {
    for (std::size_t x = 0; x < cfa.width; ++x) {
      const double v = std::clamp(static_cast<double>(cfa.at(y, x)), 0.0, 1.0);
      const auto q = static_cast<std::uint16_t>(std::lround(v * 65535.0));
      raw[y * stride + 2 * x] = static_cast<png_byte>(q >> 8);
      raw[y * stride + 2 * x + 1] = static_cast<png_byte>(q & 0xFF);
    }
  }
  write_rows(path, cfa.height, cfa.width, PNG_COLOR_TYPE_GRAY, 16, raw, stride);
}

CfaFrame read_cfa(const fs::path& path, cfa::Phase phase) {
  if (!fs::exists(path)) throw DataError("no such file: " + path.string());
  const auto d = read_png(path);
  if (d.channels != 1) throw DataError(path.string() + ": a CFA mosaic must be single-channel");
  CfaFrame f(d.height, d.width, phase);
  f.plane = d.samples;
  return f;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = lower_ext(e.path());
    if (ext == ".png" || ext == ".ppm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

RgbImage synthetic_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(height, width);
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t c = 0; c < 3; ++c) {
    struct Wave {
      double fy, fx, phase, amp;
    };
    Wave waves[3];
    for (auto& wv : waves) {
      wv.fy = rng.uniform(0.2, 1.5);
      wv.fx = rng.uniform(0.2, 1.5);
      wv.phase = rng.uniform(0.0, two_pi);
      wv.amp = rng.uniform(0.3, 1.0);
    }
    double norm = 0;
    for (const auto& wv : waves) norm += wv.amp;
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double v = static_cast<double>(y) / static_cast<double>(height);
        const double u = static_cast<double>(x) / static_cast<double>(width);
        double s = 0;
        for (const auto& wv : waves) s += wv.amp * std::sin(two_pi * (wv.fy * v + wv.fx * u) + wv.phase);
        img.at(c, y, x) = static_cast<float>(0.5 + 0.4 * s / norm);
      }
    }
  }
  return img;
}

}  // namespace jdsr::io
