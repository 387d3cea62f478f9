#include "jdsr/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

#include "jdsr/errors.hpp"

namespace jdsr::ad {
namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

template <typename T>
Tape<T>* recording_tape(std::initializer_list<const Tensor<T>*> inputs) {
  auto* tape = active_tape<T>();
  if (!tape) return nullptr;
  for (const auto* t : inputs) {
    if (t->defined() && t->requires_grad()) return tape;
  }
  return nullptr;
}

template <typename T>
void check_finite(const Tensor<T>& out, const char* op) {
  for (T v : out.data()) {
    if (!std::isfinite(v)) {
      throw NumericalError(std::string(op) + ": produced a non-finite value");
    }
  }
}

void require_rank(const Shape& s, std::size_t rank, const char* op, const char* what) {
  if (s.size() != rank) {
    throw DimensionError(std::string(op) + ": " + what + " must have rank " +
                         std::to_string(rank) + ", got " + to_string(s));
  }
}

// Elementwise unary op with derivative expressed through (x, y).
template <typename T, typename F, typename DF>
Tensor<T> unary(const Tensor<T>& x, const char* op, F f, DF df) {
  Tensor<T> out(x.shape());
  auto xd = x.data();
  auto yd = out.data();
  for (std::size_t i = 0; i < xd.size(); ++i) yd[i] = f(xd[i]);
  check_finite(out, op);
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record(op, [x, out, df]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto xv = x.data();
      auto yv = out.data();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
    });
  }
  return out;
}

enum class Broadcast { kNone, kScalarA, kScalarB };

template <typename T>
Broadcast broadcast_mode(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kNone;
  if (b.numel() == 1) return Broadcast::kScalarB;
  if (a.numel() == 1) return Broadcast::kScalarA;
  throw DimensionError(std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                       " and " + to_string(b.shape()));
}

// Binary elementwise op; dfa/dfb give partial derivatives at (a_i, b_i).
template <typename T, typename F, typename DFA, typename DFB>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, const char* op, F f, DFA dfa, DFB dfb) {
  const Broadcast mode = broadcast_mode(a, b, op);
  const Shape shape = mode == Broadcast::kScalarA ? b.shape() : a.shape();
  Tensor<T> out(shape);
  const std::size_t n = out.numel();
  auto ad = a.data();
  auto bd = b.data();
  auto yd = out.data();
  const std::size_t sa = mode == Broadcast::kScalarA ? 0 : 1;
  const std::size_t sb = mode == Broadcast::kScalarB ? 0 : 1;
  for (std::size_t i = 0; i < n; ++i) yd[i] = f(ad[i * sa], bd[i * sb]);
  check_finite(out, op);
  if (auto* tape = recording_tape<T>({&a, &b})) {
    out.set_requires_grad(true);
    tape->record(op, [a, b, out, sa, sb, n, dfa, dfb]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto av = a.data();
      auto bv = b.data();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        if (sa == 0) {
          double acc = 0;
          for (std::size_t i = 0; i < n; ++i) acc += gy[i] * dfa(av[0], bv[i * sb]);
          ga[0] += static_cast<T>(acc);
        } else {
          for (std::size_t i = 0; i < n; ++i) ga[i] += gy[i] * dfa(av[i], bv[i * sb]);
        }
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        if (sb == 0) {
          double acc = 0;
          for (std::size_t i = 0; i < n; ++i) acc += gy[i] * dfb(av[i * sa], bv[0]);
          gb[0] += static_cast<T>(acc);
        } else {
          for (std::size_t i = 0; i < n; ++i) gb[i] += gy[i] * dfb(av[i * sa], bv[i]);
        }
      }
    });
  }
  return out;
}

struct ConvGeometry {
  std::size_t n, cin, h, w, cout, kh, kw, stride, pad, ho, wo;
  std::size_t k() const { return cin * kh * kw; }
  std::size_t p() const { return ho * wo; }
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const std::size_t P = g.p();
  for (std::size_t c = 0; c < g.cin; ++c) {
    const T* xc = x + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = col + ((c * g.kh + ki) * g.kw + kj) * P;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
          T* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.wo, T{0});
            continue;
          }
          const T* src = xc + static_cast<std::size_t>(ih) * g.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
            dst[ow] = (iw < 0 || iw >= static_cast<long>(g.w)) ? T{0} : src[iw];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* x) {
  const std::size_t P = g.p();
  for (std::size_t c = 0; c < g.cin; ++c) {
    T* xc = x + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = col + ((c * g.kh + ki) * g.kw + kj) * P;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const long ih = static_cast<long>(oh * g.stride + ki) - static_cast<long>(g.pad);
          if (ih < 0 || ih >= static_cast<long>(g.h)) continue;
          T* dst = xc + static_cast<std::size_t>(ih) * g.w;
          const T* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const long iw = static_cast<long>(ow * g.stride + kj) - static_cast<long>(g.pad);
            if (iw >= 0 && iw < static_cast<long>(g.w)) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_rank(x.shape(), 4, "conv2d", "input");
  require_rank(weight.shape(), 4, "conv2d", "weight");
  if (stride == 0) throw DimensionError("conv2d: stride must be >= 1");
  ConvGeometry g{};
  g.n = x.dim(0);
  g.cin = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.cout = weight.dim(0);
  g.kh = weight.dim(2);
  g.kw = weight.dim(3);
  g.stride = stride;
  g.pad = padding;
  if (weight.dim(1) != g.cin) {
    throw DimensionError("conv2d: input has " + std::to_string(g.cin) +
                         " channels but weight expects " + std::to_string(weight.dim(1)));
  }
  if (g.kh > g.h + 2 * padding || g.kw > g.w + 2 * padding) {
    throw DimensionError("conv2d: kernel larger than padded input");
  }
  if (bias.defined() && (bias.numel() != g.cout)) {
    throw DimensionError("conv2d: bias must have " + std::to_string(g.cout) + " elements");
  }
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;

  const std::size_t K = g.k();
  const std::size_t P = g.p();
  Tensor<T> out({g.n, g.cout, g.ho, g.wo});
  std::vector<T> col(g.pointwise() ? 0 : K * P);
  ConstMatMap<T> W(weight.data().data(), g.cout, K);
  for (std::size_t n = 0; n < g.n; ++n) {
    const T* xn = x.data().data() + n * g.cin * g.h * g.w;
    T* yn = out.data().data() + n * g.cout * P;
    const T* cp = xn;
    if (!g.pointwise()) {
      im2col(xn, g, col.data());
      cp = col.data();
    }
    MatMap<T> Y(yn, g.cout, P);
    Y.noalias() = W * ConstMatMap<T>(cp, K, P);
    if (bias.defined()) {
      auto bd = bias.data();
      for (std::size_t c = 0; c < g.cout; ++c) Y.row(c).array() += bd[c];
    }
  }
  check_finite(out, "conv2d");

  if (auto* tape = recording_tape<T>({&x, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record("conv2d", [x, weight, bias, out, g]() mutable {
      if (!out.has_grad()) return;
      const std::size_t K = g.k();
      const std::size_t P = g.p();
      const bool need_x = x.requires_grad();
      const bool need_w = weight.requires_grad();
      const bool need_b = bias.defined() && bias.requires_grad();
      auto gy = out.grad();
      if (need_b) {
        auto gb = bias.mutable_grad();
        for (std::size_t n = 0; n < g.n; ++n) {
          for (std::size_t c = 0; c < g.cout; ++c) {
            const T* row = gy.data() + (n * g.cout + c) * P;
            double acc = 0;
            for (std::size_t i = 0; i < P; ++i) acc += row[i];
            gb[c] += static_cast<T>(acc);
          }
        }
      }
      if (!need_x && !need_w) return;
      ConstMatMap<T> W(weight.data().data(), g.cout, K);
      std::vector<T> col(g.pointwise() ? 0 : K * P);
      std::vector<T> dcol(g.pointwise() ? 0 : K * P);
      T* gw = need_w ? weight.mutable_grad().data() : nullptr;
      T* gx = need_x ? x.mutable_grad().data() : nullptr;
      for (std::size_t n = 0; n < g.n; ++n) {
        ConstMatMap<T> GY(gy.data() + n * g.cout * P, g.cout, P);
        const T* xn = x.data().data() + n * g.cin * g.h * g.w;
        if (need_w) {
          const T* cp = xn;
          if (!g.pointwise()) {
            im2col(xn, g, col.data());
            cp = col.data();
          }
          MatMap<T>(gw, g.cout, K).noalias() += GY * ConstMatMap<T>(cp, K, P).transpose();
        }
        if (need_x) {
          T* gxn = gx + n * g.cin * g.h * g.w;
          if (g.pointwise()) {
            MatMap<T>(gxn, K, P).noalias() += W.transpose() * GY;
          } else {
            MatMap<T>(dcol.data(), K, P).noalias() = W.transpose() * GY;
            col2im_add(dcol.data(), g, gxn);
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  return unary(
      x, "relu", [](T v) { return v > T{0} ? v : T{0}; },
      [](T v, T) { return v > T{0} ? T{1} : T{0}; });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
  return unary(
      x, "leaky_relu", [slope](T v) { return v > T{0} ? v : slope * v; },
      [slope](T v, T) { return v > T{0} ? T{1} : slope; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  return unary(
      x, "sigmoid",
      [](T v) {
        if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
        const T e = std::exp(v);
        return e / (T{1} + e);
      },
      [](T, T y) { return y * (T{1} - y); });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "global_avg_pool", "input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (HW == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  Tensor<T> out({N, C, 1, 1});
  auto xd = x.data();
  auto yd = out.data();
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    double acc = 0;
    for (std::size_t i = 0; i < HW; ++i) acc += xd[nc * HW + i];
    yd[nc] = static_cast<T>(acc / static_cast<double>(HW));
  }
  check_finite(out, "global_avg_pool");
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record("global_avg_pool", [x, out, N, C, HW]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.mutable_grad();
      const T inv = T{1} / static_cast<T>(HW);
      for (std::size_t nc = 0; nc < N * C; ++nc) {
        const T g = gy[nc] * inv;
        for (std::size_t i = 0; i < HW; ++i) gx[nc * HW + i] += g;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> scale_channels(const Tensor<T>& u, const Tensor<T>& s) {
  require_rank(u.shape(), 4, "scale_channels", "features");
  require_rank(s.shape(), 4, "scale_channels", "scales");
  const std::size_t N = u.dim(0), C = u.dim(1), HW = u.dim(2) * u.dim(3);
  if (s.dim(0) != N || s.dim(1) != C || s.dim(2) != 1 || s.dim(3) != 1) {
    throw DimensionError("scale_channels: scales " + to_string(s.shape()) +
                         " do not match features " + to_string(u.shape()));
  }
  Tensor<T> out(u.shape());
  auto ud = u.data();
  auto sd = s.data();
  auto yd = out.data();
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    for (std::size_t i = 0; i < HW; ++i) yd[nc * HW + i] = sd[nc] * ud[nc * HW + i];
  }
  check_finite(out, "scale_channels");
  if (auto* tape = recording_tape<T>({&u, &s})) {
    out.set_requires_grad(true);
    tape->record("scale_channels", [u, s, out, N, C, HW]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto ud = u.data();
      auto sd = s.data();
      if (u.requires_grad()) {
        auto gu = u.mutable_grad();
        for (std::size_t nc = 0; nc < N * C; ++nc) {
          for (std::size_t i = 0; i < HW; ++i) gu[nc * HW + i] += gy[nc * HW + i] * sd[nc];
        }
      }
      if (s.requires_grad()) {
        auto gs = s.mutable_grad();
        for (std::size_t nc = 0; nc < N * C; ++nc) {
          double acc = 0;
          for (std::size_t i = 0; i < HW; ++i) acc += gy[nc * HW + i] * ud[nc * HW + i];
          gs[nc] += static_cast<T>(acc);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  for (const auto& p : parts) require_rank(p.shape(), 4, "concat_channels", "input");
  const std::size_t N = parts[0].dim(0), H = parts[0].dim(2), W = parts[0].dim(3);
  std::size_t C = 0;
  for (const auto& p : parts) {
    if (p.dim(0) != N || p.dim(2) != H || p.dim(3) != W) {
      throw DimensionError("concat_channels: spatial/batch mismatch " +
                           to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
    }
    C += p.dim(1);
  }
  const std::size_t HW = H * W;
  Tensor<T> out({N, C, H, W});
  auto yd = out.data();
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const std::size_t cp = p.dim(1);
      auto pd = p.data();
      std::copy_n(pd.begin() + n * cp * HW, cp * HW, yd.begin() + (n * C + offset) * HW);
      offset += cp;
    }
  }
  bool any = false;
  for (const auto& p : parts) any = any || p.requires_grad();
  auto* tape = active_tape<T>();
  if (tape && any) {
    out.set_requires_grad(true);
    tape->record("concat_channels", [parts, out, N, C, HW]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      std::size_t offset = 0;
      for (auto& p : parts) {
        const std::size_t cp = p.dim(1);
        if (p.requires_grad()) {
          auto gp = p.mutable_grad();
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < cp * HW; ++i) {
              gp[n * cp * HW + i] += gy[(n * C + offset) * HW + i];
            }
          }
        }
        offset += cp;
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t start, std::size_t count) {
  require_rank(x.shape(), 4, "slice_channels", "input");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (count == 0 || start + count > C) {
    throw DimensionError("slice_channels: range [" + std::to_string(start) + "," +
                         std::to_string(start + count) + ") outside " + std::to_string(C) +
                         " channels");
  }
  const std::size_t HW = H * W;
  Tensor<T> out({N, count, H, W});
  auto xd = x.data();
  auto yd = out.data();
  for (std::size_t n = 0; n < N; ++n) {
    std::copy_n(xd.begin() + (n * C + start) * HW, count * HW, yd.begin() + n * count * HW);
  }
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record("slice_channels", [x, out, N, C, HW, start, count]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.mutable_grad();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t i = 0; i < count * HW; ++i) {
          gx[(n * C + start) * HW + i] += gy[n * count * HW + i];
        }
      }
    });
  }
  return out;
}

namespace {

// Index map shared by pixel_shuffle and its inverse: for each output element of
// the shuffled layout, the flat index into the unshuffled layout.
std::vector<std::size_t> shuffle_index(std::size_t N, std::size_t C, std::size_t H, std::size_t W,
                                       std::size_t r) {
  const std::size_t Hs = H * r, Ws = W * r;
  std::vector<std::size_t> idx(N * C * Hs * Ws);
  std::size_t o = 0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t y = 0; y < Hs; ++y) {
        for (std::size_t x = 0; x < Ws; ++x) {
          const std::size_t i = y / r, a = y % r, j = x / r, b = x % r;
          const std::size_t src_c = c * r * r + a * r + b;
          idx[o++] = ((n * C * r * r + src_c) * H + i) * W + j;
        }
      }
    }
  }
  return idx;
}

template <typename T>
Tensor<T> gather(const Tensor<T>& x, Shape out_shape, std::vector<std::size_t> src,
                 const char* op) {
  Tensor<T> out(std::move(out_shape));
  auto xd = x.data();
  auto yd = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) yd[i] = xd[src[i]];
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record(op, [x, out, src = std::move(src)]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < src.size(); ++i) gx[src[i]] += gy[i];
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t r) {
  require_rank(x.shape(), 4, "pixel_shuffle", "input");
  if (r == 0) throw DimensionError("pixel_shuffle: factor must be >= 1");
  const std::size_t N = x.dim(0), Cr = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (Cr % (r * r) != 0) {
    throw DimensionError("pixel_shuffle: " + std::to_string(Cr) +
                         " channels not divisible by r^2=" + std::to_string(r * r));
  }
  const std::size_t C = Cr / (r * r);
  return gather(x, {N, C, H * r, W * r}, shuffle_index(N, C, H, W, r), "pixel_shuffle");
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t r) {
  require_rank(x.shape(), 4, "pixel_unshuffle", "input");
  if (r == 0) throw DimensionError("pixel_unshuffle: factor must be >= 1");
  const std::size_t N = x.dim(0), C = x.dim(1), Hs = x.dim(2), Ws = x.dim(3);
  if (Hs % r != 0 || Ws % r != 0) {
    throw DimensionError("pixel_unshuffle: spatial size not divisible by " + std::to_string(r));
  }
  const std::size_t H = Hs / r, W = Ws / r;
  const auto forward = shuffle_index(N, C, H, W, r);
  std::vector<std::size_t> inverse(forward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) inverse[forward[i]] = i;
  return gather(x, {N, C * r * r, H, W}, std::move(inverse), "pixel_unshuffle");
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T) { return T{1}; },
      [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T) { return T{1}; },
      [](T, T) { return T{-1}; });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> neg(const Tensor<T>& x) {
  return unary(
      x, "neg", [](T v) { return -v; }, [](T, T) { return T{-1}; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c) {
  return unary(
      x, "add_scalar", [c](T v) { return v + c; }, [](T, T) { return T{1}; });
}

template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T c) {
  return unary(
      x, "mul_scalar", [c](T v) { return v * c; }, [c](T, T) { return c; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& x) {
  for (T v : x.data()) {
    if (!(v > T{0})) throw DomainError("log: non-positive input " + std::to_string(v));
  }
  return unary(
      x, "log", [](T v) { return std::log(v); }, [](T v, T) { return T{1} / v; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& x) {
  return unary(
      x, "abs", [](T v) { return std::abs(v); },
      [](T v, T) { return v > T{0} ? T{1} : (v < T{0} ? T{-1} : T{0}); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& x) {
  return unary(
      x, "square", [](T v) { return v * v; }, [](T v, T) { return T{2} * v; });
}

template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& x, T p) {
  for (T v : x.data()) {
    if (v < T{0}) throw DomainError("pow_scalar: negative base " + std::to_string(v));
  }
  return unary(
      x, "pow_scalar", [p](T v) { return p == T{0} ? T{1} : std::pow(v, p); },
      [p](T v, T) { return p == T{0} ? T{0} : p * std::pow(v, p - T{1}); });
}

template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi) {
  if (lo > hi) throw DomainError("clamp: lo > hi");
  return unary(
      x, "clamp", [lo, hi](T v) { return std::clamp(v, lo, hi); },
      [lo, hi](T v, T) { return (v >= lo && v <= hi) ? T{1} : T{0}; });
}

namespace {

template <typename T>
Tensor<T> reduce(const Tensor<T>& x, bool average, const char* op) {
  const std::size_t n = x.numel();
  if (n == 0) throw DimensionError(std::string(op) + ": empty tensor");
  double acc = 0;
  for (T v : x.data()) acc += v;
  if (average) acc /= static_cast<double>(n);
  Tensor<T> out = Tensor<T>::scalar(static_cast<T>(acc));
  check_finite(out, op);
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record(op, [x, out, n, average]() mutable {
      if (!out.has_grad()) return;
      const T g = average ? out.grad()[0] / static_cast<T>(n) : out.grad()[0];
      for (auto& gx : x.mutable_grad()) gx += g;
    });
  }
  return out;
}

}  // namespace

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  return reduce(x, false, "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  return reduce(x, true, "mean");
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  if (numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + to_string(x.shape()) + " as " +
                         to_string(shape));
  }
  auto xd = x.data();
  Tensor<T> out(std::move(shape), std::vector<T>(xd.begin(), xd.end()));
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record("reshape", [x, out]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank(x.shape(), 2, "linear", "input");
  require_rank(weight.shape(), 2, "linear", "weight");
  const std::size_t N = x.dim(0), F = x.dim(1), O = weight.dim(0);
  if (weight.dim(1) != F) {
    throw DimensionError("linear: input has " + std::to_string(F) +
                         " features but weight expects " + std::to_string(weight.dim(1)));
  }
  if (bias.defined() && bias.numel() != O) {
    throw DimensionError("linear: bias must have " + std::to_string(O) + " elements");
  }
  Tensor<T> out({N, O});
  MatMap<T> Y(out.data().data(), N, O);
  Y.noalias() = ConstMatMap<T>(x.data().data(), N, F) *
                ConstMatMap<T>(weight.data().data(), O, F).transpose();
  if (bias.defined()) {
    auto bd = bias.data();
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t o = 0; o < O; ++o) Y(n, o) += bd[o];
    }
  }
  check_finite(out, "linear");
  if (auto* tape = recording_tape<T>({&x, &weight, &bias})) {
    out.set_requires_grad(true);
    tape->record("linear", [x, weight, bias, out, N, F, O]() mutable {
      if (!out.has_grad()) return;
      ConstMatMap<T> GY(out.grad().data(), N, O);
      if (x.requires_grad()) {
        MatMap<T>(x.mutable_grad().data(), N, F).noalias() +=
            GY * ConstMatMap<T>(weight.data().data(), O, F);
      }
      if (weight.requires_grad()) {
        MatMap<T>(weight.mutable_grad().data(), O, F).noalias() +=
            GY.transpose() * ConstMatMap<T>(x.data().data(), N, F);
      }
      if (bias.defined() && bias.requires_grad()) {
        auto gb = bias.mutable_grad();
        for (std::size_t o = 0; o < O; ++o) {
          double acc = 0;
          for (std::size_t n = 0; n < N; ++n) acc += GY(n, o);
          gb[o] += static_cast<T>(acc);
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       T eps) {
  require_rank(x.shape(), 4, "batch_norm2d", "input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (gamma.numel() != C || beta.numel() != C) {
    throw DimensionError("batch_norm2d: affine parameters must have " + std::to_string(C) +
                         " elements");
  }
  const std::size_t M = N * HW;
  std::vector<T> mu(C), inv_std(C);
  Tensor<T> xhat(x.shape());
  Tensor<T> out(x.shape());
  auto xd = x.data();
  auto hd = xhat.data();
  auto yd = out.data();
  auto gd = gamma.data();
  auto bd = beta.data();
  for (std::size_t c = 0; c < C; ++c) {
    double s = 0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < HW; ++i) s += xd[(n * C + c) * HW + i];
    }
    const double m = s / static_cast<double>(M);
    double v = 0;
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < HW; ++i) {
        const double d = xd[(n * C + c) * HW + i] - m;
        v += d * d;
      }
    }
    v /= static_cast<double>(M);
    mu[c] = static_cast<T>(m);
    inv_std[c] = static_cast<T>(1.0 / std::sqrt(v + static_cast<double>(eps)));
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t i = 0; i < HW; ++i) {
        const std::size_t k = (n * C + c) * HW + i;
        hd[k] = (xd[k] - mu[c]) * inv_std[c];
        yd[k] = gd[c] * hd[k] + bd[c];
      }
    }
  }
  check_finite(out, "batch_norm2d");
  if (auto* tape = recording_tape<T>({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    tape->record("batch_norm2d", [x, gamma, beta, out, xhat, inv_std, N, C, HW, M]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto hd = xhat.data();
      auto gd = gamma.data();
      for (std::size_t c = 0; c < C; ++c) {
        double sum_g = 0, sum_gh = 0;
        for (std::size_t n = 0; n < N; ++n) {
          for (std::size_t i = 0; i < HW; ++i) {
            const std::size_t k = (n * C + c) * HW + i;
            sum_g += gy[k];
            sum_gh += gy[k] * hd[k];
          }
        }
        if (gamma.requires_grad()) gamma.mutable_grad()[c] += static_cast<T>(sum_gh);
        if (beta.requires_grad()) beta.mutable_grad()[c] += static_cast<T>(sum_g);
        if (x.requires_grad()) {
          auto gx = x.mutable_grad();
          const double scale = static_cast<double>(gd[c]) * inv_std[c] / static_cast<double>(M);
          for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t i = 0; i < HW; ++i) {
              const std::size_t k = (n * C + c) * HW + i;
              gx[k] += static_cast<T>(scale * (static_cast<double>(M) * gy[k] - sum_g -
                                               hd[k] * sum_gh));
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "max_pool2x2", "input");
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t Ho = H / 2, Wo = W / 2;
  if (Ho == 0 || Wo == 0) throw DimensionError("max_pool2x2: input smaller than 2x2");
  Tensor<T> out({N, C, Ho, Wo});
  std::vector<std::size_t> argmax(out.numel());
  auto xd = x.data();
  auto yd = out.data();
  for (std::size_t nc = 0; nc < N * C; ++nc) {
    for (std::size_t i = 0; i < Ho; ++i) {
      for (std::size_t j = 0; j < Wo; ++j) {
        std::size_t best = (nc * H + 2 * i) * W + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t k = (nc * H + 2 * i + di) * W + 2 * j + dj;
            if (xd[k] > xd[best]) best = k;
          }
        }
        const std::size_t o = (nc * Ho + i) * Wo + j;
        argmax[o] = best;
        yd[o] = xd[best];
      }
    }
  }
  if (auto* tape = recording_tape<T>({&x})) {
    out.set_requires_grad(true);
    tape->record("max_pool2x2", [x, out, argmax = std::move(argmax)]() mutable {
      if (!out.has_grad()) return;
      auto gy = out.grad();
      auto gx = x.mutable_grad();
      for (std::size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
    });
  }
  return out;
}

#define JDSR_INSTANTIATE_OPS(T)                                                              \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                            std::size_t, std::size_t);                                       \
  template Tensor<T> relu(const Tensor<T>&);                                                 \
  template Tensor<T> leaky_relu(const Tensor<T>&, T);                                        \
  template Tensor<T> sigmoid(const Tensor<T>&);                                              \
  template Tensor<T> global_avg_pool(const Tensor<T>&);                                      \
  template Tensor<T> scale_channels(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> concat_channels(const std::vector<Tensor<T>>&);                         \
  template Tensor<T> slice_channels(const Tensor<T>&, std::size_t, std::size_t);             \
  template Tensor<T> pixel_shuffle(const Tensor<T>&, std::size_t);                           \
  template Tensor<T> pixel_unshuffle(const Tensor<T>&, std::size_t);                         \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> neg(const Tensor<T>&);                                                  \
  template Tensor<T> add_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> mul_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> log(const Tensor<T>&);                                                  \
  template Tensor<T> abs(const Tensor<T>&);                                                  \
  template Tensor<T> square(const Tensor<T>&);                                               \
  template Tensor<T> pow_scalar(const Tensor<T>&, T);                                        \
  template Tensor<T> clamp(const Tensor<T>&, T, T);                                          \
  template Tensor<T> sum(const Tensor<T>&);                                                  \
  template Tensor<T> mean(const Tensor<T>&);                                                 \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                       \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);           \
  template Tensor<T> max_pool2x2(const Tensor<T>&);                                          \
  template Tensor<T> batch_norm2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);

JDSR_INSTANTIATE_OPS(float)
JDSR_INSTANTIATE_OPS(double)

#undef JDSR_INSTANTIATE_OPS

}  // namespace jdsr::ad
