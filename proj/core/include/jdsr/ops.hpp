#pragma once

// Differentiable primitives over NCHW tensors. Every op checks its output for
// NaN/Inf and throws NumericalError if one appears.

#include <cstddef>
#include <vector>

#include "jdsr/tensor.hpp"

namespace jdsr::ad {

// x[N,Cin,H,W] * weight[Cout,Cin,kh,kw] + bias[Cout] with zero padding.
// `bias` may be undefined (no bias term).
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t padding = 0);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope);
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

// [N,C,H,W] -> [N,C,1,1] spatial mean.
template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x);

// u[N,C,H,W] scaled per channel by s[N,C,1,1].
template <typename T>
Tensor<T> scale_channels(const Tensor<T>& u, const Tensor<T>& s);

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t start, std::size_t count);

// [N,C*r*r,H,W] -> [N,C,rH,rW]; out(c, r*i+a, r*j+b) = in(c*r*r + a*r + b, i, j).
template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, std::size_t r);
// Inverse rearrangement [N,C,rH,rW] -> [N,C*r*r,H,W].
template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, std::size_t r);

// Elementwise binary ops accept equal shapes, or either operand with a single
// element (broadcast).
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> neg(const Tensor<T>& x);
template <typename T>
Tensor<T> add_scalar(const Tensor<T>& x, T c);
template <typename T>
Tensor<T> mul_scalar(const Tensor<T>& x, T c);
// Throws DomainError on any non-positive input.
template <typename T>
Tensor<T> log(const Tensor<T>& x);
template <typename T>
Tensor<T> abs(const Tensor<T>& x);
template <typename T>
Tensor<T> square(const Tensor<T>& x);
// x^p for x >= 0.
template <typename T>
Tensor<T> pow_scalar(const Tensor<T>& x, T p);
// Gradient passes only where lo <= x <= hi.
template <typename T>
Tensor<T> clamp(const Tensor<T>& x, T lo, T hi);

template <typename T>
Tensor<T> sum(const Tensor<T>& x);
template <typename T>
Tensor<T> mean(const Tensor<T>& x);

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape);

// x[N,F] -> x W^T + b, with weight[O,F], bias[O].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped. The
// gradient goes to the first maximal element of each window.
template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x);

// Training-mode batch normalisation: statistics over (N,H,W) per channel,
// biased variance.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                       T eps = T(1e-5));

// Operator sugar for loss formulas.
template <typename T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T>
Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }
template <typename T>
Tensor<T> operator-(const Tensor<T>& x) { return neg(x); }

}  // namespace jdsr::ad
