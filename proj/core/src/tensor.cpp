#include "jdsr/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "jdsr/errors.hpp"

namespace jdsr::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : impl_(std::make_shared<Impl>()) {
  impl_->data.assign(ad::numel(shape), fill);
  impl_->shape = std::move(shape);
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : impl_(std::make_shared<Impl>()) {
  if (ad::numel(shape) != values.size()) {
    throw DimensionError("tensor: shape " + to_string(shape) + " needs " +
                         std::to_string(ad::numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

template <typename T>
const typename Tensor<T>::Impl& Tensor<T>::checked() const {
  if (!impl_) throw Error("tensor: use of undefined tensor");
  return *impl_;
}

template <typename T>
typename Tensor<T>::Impl& Tensor<T>::checked() {
  if (!impl_) throw Error("tensor: use of undefined tensor");
  return *impl_;
}

template <typename T>
const Shape& Tensor<T>::shape() const {
  return checked().shape;
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("tensor: axis " + std::to_string(axis) + " out of range for shape " +
                         to_string(s));
  }
  return s[axis];
}

template <typename T>
std::span<T> Tensor<T>::data() {
  return checked().data;
}

template <typename T>
std::span<const T> Tensor<T>::data() const {
  return checked().data;
}

template <typename T>
T Tensor<T>::item() const {
  const auto& d = checked().data;
  if (d.size() != 1) {
    throw DimensionError("tensor: item() on tensor with " + std::to_string(d.size()) +
                         " elements");
  }
  return d[0];
}

template <typename T>
T& Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
  auto& im = checked();
  const auto& s = im.shape;
  return im.data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
T Tensor<T>::at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
  const auto& im = checked();
  const auto& s = im.shape;
  return im.data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool flag) {
  checked().requires_grad = flag;
  return *this;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  return checked().grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() const {
  if (!impl_) throw Error("tensor: use of undefined tensor");
  auto& im = *impl_;
  if (im.grad.empty()) im.grad.assign(im.data.size(), T{0});
  return im.grad;
}

template <typename T>
Tensor<T> Tensor<T>::grad_tensor() const {
  const auto& im = checked();
  if (im.grad.empty()) return Tensor(im.shape);
  return Tensor(im.shape, im.grad);
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& im = checked();
  std::fill(im.grad.begin(), im.grad.end(), T{0});
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  const auto& im = checked();
  return Tensor(im.shape, im.data);
}

namespace {
template <typename T>
thread_local Tape<T>* g_active_tape = nullptr;
}  // namespace

template <typename T>
Tape<T>* active_tape() noexcept {
  return g_active_tape<T>;
}

template <typename T>
TapeScope<T>::TapeScope(Tape<T>* tape) noexcept : previous_(g_active_tape<T>) {
  g_active_tape<T> = tape;
}

template <typename T>
TapeScope<T>::~TapeScope() {
  g_active_tape<T> = previous_;
}

template <typename T>
void Tape<T>::record(std::string_view op, Adjoint adjoint) {
  entries_.push_back(Entry{op, std::move(adjoint)});
}

template <typename T>
std::vector<std::string> Tape<T>::op_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& e : entries_) names.emplace_back(e.op);
  return names;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward: loss must have exactly one element, got shape " +
                         (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
  }
  if (!loss.requires_grad()) {
    throw Error("backward: loss does not depend on any tensor that requires a gradient");
  }
  auto seed = loss.mutable_grad();
  seed[0] = T{1};
  // Entries are consumed as they run so that temporaries are freed early.
  std::vector<Entry> entries = std::move(entries_);
  entries_.clear();
  last_replay_count_ = 0;
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    it->adjoint();
    it->adjoint = nullptr;
    ++last_replay_count_;
  }
}

template <typename T>
void backward(const Tensor<T>& loss) {
  auto* tape = active_tape<T>();
  if (!tape) throw Error("backward: no active tape");
  tape->backward(loss);
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template class TapeScope<float>;
template class TapeScope<double>;
template Tape<float>* active_tape<float>() noexcept;
template Tape<double>* active_tape<double>() noexcept;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

}  // namespace jdsr::ad
