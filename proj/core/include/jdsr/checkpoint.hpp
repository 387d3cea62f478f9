#pragma once

// Flat container of named arrays used for model save/load. Byte layout is
// documented in docs/checkpoint_format.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jdsr/tensor.hpp"

namespace jdsr::ad {

enum class DType : std::uint8_t { kFloat32 = 0, kFloat64 = 1, kUInt8 = 2 };

struct NamedArray {
  std::string name;
  DType dtype = DType::kFloat32;
  Shape shape;
  std::vector<std::uint8_t> bytes;  // little-endian payload
};

class Checkpoint {
 public:
  void put(const std::string& name, const Tensor<float>& t);
  void put(const std::string& name, const Tensor<double>& t);
  // Arbitrary UTF-8 text stored as a rank-1 uint8 array.
  void put_text(const std::string& name, const std::string& text);

  bool contains(const std::string& name) const;
  const NamedArray& entry(const std::string& name) const;
  const std::vector<NamedArray>& entries() const noexcept { return entries_; }

  // Converts between float32/float64 storage when T differs from the stored dtype.
  template <typename T>
  Tensor<T> get(const std::string& name) const;
  std::string text(const std::string& name) const;

  std::vector<std::uint8_t> serialize() const;
  static Checkpoint deserialize(const std::vector<std::uint8_t>& buffer);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  void insert(NamedArray array);
  std::vector<NamedArray> entries_;
};

extern template Tensor<float> Checkpoint::get<float>(const std::string&) const;
extern template Tensor<double> Checkpoint::get<double>(const std::string&) const;

}  // namespace jdsr::ad
