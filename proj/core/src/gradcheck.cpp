#include "jdsr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "jdsr/errors.hpp"

namespace jdsr::ad {

template <typename T>
Tensor<T> finite_difference_grad(const ScalarFunction<T>& f, Tensor<T> x, T h) {
  if (!(h > T{0})) throw DomainError("finite_difference_grad: step must be positive");
  NoTapeScope<T> no_tape;
  Tensor<T> grad(x.shape());
  auto xd = x.data();
  auto gd = grad.data();
  for (std::size_t i = 0; i < xd.size(); ++i) {
    const T saved = xd[i];
    xd[i] = saved + h;
    const T plus = f(x).item();
    xd[i] = saved - h;
    const T minus = f(x).item();
    xd[i] = saved;
    gd[i] = (plus - minus) / (T{2} * h);
  }
  return grad;
}

template <typename T>
double max_relative_error(const Tensor<T>& a, const Tensor<T>& b, double floor) {
  if (a.shape() != b.shape()) {
    throw DimensionError("max_relative_error: shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
  double worst = 0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) {
    const double x = ad[i], y = bd[i];
    const double denom = std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

template Tensor<float> finite_difference_grad(const ScalarFunction<float>&, Tensor<float>, float);
template Tensor<double> finite_difference_grad(const ScalarFunction<double>&, Tensor<double>,
                                               double);
template double max_relative_error(const Tensor<float>&, const Tensor<float>&, double);
template double max_relative_error(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace jdsr::ad
