#include "jdsr/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "jdsr/errors.hpp"

namespace jdsr::ad {
namespace {

constexpr char kMagic[8] = {'J', 'D', 'S', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void append_le(std::vector<std::uint8_t>& out, U value) {
  static_assert(std::is_integral_v<U>);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

  template <typename U>
  U read() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::vector<std::uint8_t> bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(buf_.begin() + static_cast<long>(pos_),
                                  buf_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size()) throw DataError("checkpoint: truncated container");
  }
  const std::vector<std::uint8_t>& buf_;
  std::size_t pos_ = 0;
};

template <typename F>
std::vector<std::uint8_t> encode_floats(std::span<const F> values) {
  using Bits = std::conditional_t<sizeof(F) == 4, std::uint32_t, std::uint64_t>;
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * sizeof(F));
  for (F v : values) append_le(out, std::bit_cast<Bits>(v));
  return out;
}

template <typename F>
std::vector<F> decode_floats(const std::vector<std::uint8_t>& bytes) {
  using Bits = std::conditional_t<sizeof(F) == 4, std::uint32_t, std::uint64_t>;
  std::vector<F> out(bytes.size() / sizeof(F));
  for (std::size_t i = 0; i < out.size(); ++i) {
    Bits b = 0;
    for (std::size_t k = 0; k < sizeof(F); ++k) {
      b |= static_cast<Bits>(bytes[i * sizeof(F) + k]) << (8 * k);
    }
    out[i] = std::bit_cast<F>(b);
  }
  return out;
}

std::size_t dtype_size(DType d) {
  switch (d) {
    case DType::kFloat32: return 4;
    case DType::kFloat64: return 8;
    case DType::kUInt8: return 1;
  }
  throw DataError("checkpoint: unknown dtype tag");
}

}  // namespace

void Checkpoint::insert(NamedArray array) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const NamedArray& e) { return e.name == array.name; });
  if (it != entries_.end()) {
    *it = std::move(array);
  } else {
    entries_.push_back(std::move(array));
  }
}

void Checkpoint::put(const std::string& name, const Tensor<float>& t) {
  insert({name, DType::kFloat32, t.shape(), encode_floats<float>(t.data())});
}

void Checkpoint::put(const std::string& name, const Tensor<double>& t) {
  insert({name, DType::kFloat64, t.shape(), encode_floats<double>(t.data())});
}

void Checkpoint::put_text(const std::string& name, const std::string& text) {
  insert({name, DType::kUInt8, Shape{text.size()}, std::vector<std::uint8_t>(text.begin(), text.end())});
}

bool Checkpoint::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const NamedArray& e) { return e.name == name; });
}

const NamedArray& Checkpoint::entry(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw DataError("checkpoint: no array named '" + name + "'");
}

template <typename T>
Tensor<T> Checkpoint::get(const std::string& name) const {
  const auto& e = entry(name);
  std::vector<T> values;
  if (e.dtype == DType::kFloat32) {
    auto f = decode_floats<float>(e.bytes);
    values.assign(f.begin(), f.end());
  } else if (e.dtype == DType::kFloat64) {
    auto d = decode_floats<double>(e.bytes);
    values.assign(d.begin(), d.end());
  } else {
    throw DataError("checkpoint: array '" + name + "' is not floating point");
  }
  return Tensor<T>(e.shape, std::move(values));
}

std::string Checkpoint::text(const std::string& name) const {
  const auto& e = entry(name);
  if (e.dtype != DType::kUInt8) throw DataError("checkpoint: array '" + name + "' is not text");
  return std::string(e.bytes.begin(), e.bytes.end());
}

std::vector<std::uint8_t> Checkpoint::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append_le<std::uint32_t>(out, kVersion);
  append_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    append_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    append_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    append_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.shape.size()));
    append_le<std::uint16_t>(out, 0);
    for (auto d : e.shape) append_le<std::uint64_t>(out, d);
    append_le<std::uint64_t>(out, e.bytes.size());
    out.insert(out.end(), e.bytes.begin(), e.bytes.end());
  }
  return out;
}

Checkpoint Checkpoint::deserialize(const std::vector<std::uint8_t>& buffer) {
  Reader r(buffer);
  auto magic = r.bytes(sizeof(kMagic));
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw DataError("checkpoint: bad magic");
  }
  const auto version = r.read<std::uint32_t>();
  if (version != kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = r.read<std::uint32_t>();
  Checkpoint ck;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedArray e;
    const auto name_len = r.read<std::uint32_t>();
    auto name = r.bytes(name_len);
    e.name.assign(name.begin(), name.end());
    const auto tag = r.read<std::uint8_t>();
    if (tag > static_cast<std::uint8_t>(DType::kUInt8)) {
      throw DataError("checkpoint: unknown dtype tag " + std::to_string(tag));
    }
    e.dtype = static_cast<DType>(tag);
    const auto rank = r.read<std::uint8_t>();
    r.read<std::uint16_t>();
    for (std::uint8_t k = 0; k < rank; ++k) e.shape.push_back(r.read<std::uint64_t>());
    const auto nbytes = r.read<std::uint64_t>();
    if (nbytes != numel(e.shape) * dtype_size(e.dtype)) {
      throw DataError("checkpoint: payload size mismatch for '" + e.name + "'");
    }
    e.bytes = r.bytes(nbytes);
    ck.insert(std::move(e));
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes after last array");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto buf = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw DataError("checkpoint: write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return deserialize(buf);
}

template Tensor<float> Checkpoint::get<float>(const std::string&) const;
template Tensor<double> Checkpoint::get<double>(const std::string&) const;

}  // namespace jdsr::ad
