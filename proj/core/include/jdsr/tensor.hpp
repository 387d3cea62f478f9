#pragma once

// Dense N-d tensors with reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage (use clone() for a
// deep copy). Operations record an adjoint closure on the thread's active Tape
// whenever one of their inputs requires a gradient; Tape::backward() replays
// those closures in reverse order. Without an active tape nothing is recorded.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jdsr::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), T{1}); }
  static Tensor scalar(T value) { return Tensor(Shape{1}, value); }
  static Tensor from(Shape shape, std::initializer_list<T> values) {
    return Tensor(std::move(shape), std::vector<T>(values));
  }

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const { return data().size(); }

  std::span<T> data();
  std::span<const T> data() const;
  T item() const;

  // NCHW element access for rank-4 tensors.
  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w);
  T at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const;

  bool requires_grad() const noexcept { return impl_ && impl_->requires_grad; }
  Tensor& set_requires_grad(bool flag);

  bool has_grad() const noexcept { return impl_ && !impl_->grad.empty(); }
  std::span<const T> grad() const;
  // Gradient buffer, allocated (zero-filled) on first access. Const because the
  // handle is unchanged; the shared storage is what gets written.
  std::span<T> mutable_grad() const;
  // Copy of the gradient as a standalone tensor (zeros if never accumulated).
  Tensor grad_tensor() const;
  void zero_grad();

  Tensor clone() const;
  Tensor detach() const { return clone(); }
  bool shares_storage_with(const Tensor& other) const noexcept { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;

  const Impl& checked() const;
  Impl& checked();
};

template <typename T>
class Tape {
 public:
  using Adjoint = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(std::string_view op, Adjoint adjoint);
  std::size_t size() const noexcept { return entries_.size(); }
  std::vector<std::string> op_names() const;

  // Seeds d(loss)/d(loss) = 1, replays every recorded adjoint once in reverse
  // order, then clears the tape.
  void backward(const Tensor<T>& loss);
  void clear() noexcept { entries_.clear(); }

  // Number of adjoints executed by the most recent backward().
  std::size_t last_replay_count() const noexcept { return last_replay_count_; }

 private:
  struct Entry {
    std::string_view op;
    Adjoint adjoint;
  };
  std::vector<Entry> entries_;
  std::size_t last_replay_count_ = 0;
};

// The tape that operations on this thread record into, or nullptr.
template <typename T>
Tape<T>* active_tape() noexcept;

// Activates `tape` on the current thread for the lifetime of the scope. Passing
// nullptr suspends recording (used by finite-difference oracles and inference).
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>* tape) noexcept;
  explicit TapeScope(Tape<T>& tape) noexcept : TapeScope(&tape) {}
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

template <typename T>
class NoTapeScope : public TapeScope<T> {
 public:
  NoTapeScope() noexcept : TapeScope<T>(nullptr) {}
};

// Backpropagates through the active tape. Throws if no tape is active.
template <typename T>
void backward(const Tensor<T>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;
extern template class TapeScope<float>;
extern template class TapeScope<double>;

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace jdsr::ad
