#pragma once

#include <functional>

#include "jdsr/tensor.hpp"

namespace jdsr::ad {

template <typename T>
using ScalarFunction = std::function<Tensor<T>(const Tensor<T>&)>;

// Central-difference estimate (f(x+h e_i) - f(x-h e_i)) / 2h for every coordinate
// of x. `x` is perturbed in place and restored; f runs with recording suspended.
template <typename T>
Tensor<T> finite_difference_grad(const ScalarFunction<T>& f, Tensor<T> x, T h);

// Largest |a_i - b_i| / max(|a_i|, |b_i|, floor) over all coordinates.
template <typename T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor = 1e-6);

extern template Tensor<float> finite_difference_grad(const ScalarFunction<float>&, Tensor<float>,
                                                     float);
extern template Tensor<double> finite_difference_grad(const ScalarFunction<double>&,
                                                      Tensor<double>, double);
extern template double max_relative_error(const Tensor<float>&, const Tensor<float>&, double);
extern template double max_relative_error(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace jdsr::ad
