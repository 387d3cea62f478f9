#pragma once

// Generator (pre-demosaicing network followed by the residual-dense
// squeeze-and-excitation network) and the SRGAN-style discriminator.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jdsr/cfa.hpp"
#include "jdsr/checkpoint.hpp"
#include "jdsr/demosaic.hpp"
#include "jdsr/random.hpp"
#include "jdsr/tensor.hpp"

namespace jdsr::net {

// Where ReLU sits inside each RDSEB stage relative to channel attention.
enum class ActivationPosition { kBeforeAttention, kAfterAttention };
// Whether the long skip joins before or after the final pre-upscale conv.
enum class LongSkip { kBeforeConv, kAfterConv };
enum class InputRepresentation { kThreeChannel, kOneChannel };

struct NetworkConfig {
  std::size_t num_blocks = 16;
  std::size_t modules_per_block = 6;
  std::size_t channels = 64;
  std::size_t reduction = 16;
  std::size_t scale = 4;
  std::size_t pdnet_width = 32;
  bool toy_mode = false;
  bool use_pdnet = true;
  InputRepresentation input = InputRepresentation::kThreeChannel;
  ActivationPosition activation_position = ActivationPosition::kBeforeAttention;
  LongSkip long_skip = LongSkip::kBeforeConv;

  static NetworkConfig paper(std::size_t scale = 4);
  // B=2, n=2, C=8, r=4, PDNet width 8.
  static NetworkConfig toy(std::size_t scale = 2);

  // Copy with toy_mode applied to (B, n, C, r, pdnet_width).
  NetworkConfig effective() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

struct DiscriminatorConfig {
  std::size_t base_channels = 64;
  std::size_t dense_units = 1024;
  bool batch_norm = true;
  double leaky_slope = 0.2;

  void validate() const;
  bool operator==(const DiscriminatorConfig&) const = default;
};

// Ordered, named parameter tensors of one model.
template <typename T>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, ad::Tensor<T>>;

  // Creates a zero tensor that requires a gradient. Names must be unique.
  ad::Tensor<T> add(std::string name, ad::Shape shape);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;
  ad::Tensor<T> find(const std::string& name) const;

  void zero_grad();
  void fill(T value);
  void save(ad::Checkpoint& ck, const std::string& prefix) const;
  // Every parameter must be present with a matching shape.
  void load(const ad::Checkpoint& ck, const std::string& prefix);

 private:
  std::vector<Entry> entries_;
};

template <typename T>
struct Conv {
  ad::Tensor<T> weight;
  ad::Tensor<T> bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  // Weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero bias.
  static Conv make(ParameterSet<T>& ps, Rng& rng, const std::string& name, std::size_t in,
                   std::size_t out, std::size_t kernel, std::size_t stride = 1);
  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
};

template <typename T>
struct Dense {
  ad::Tensor<T> weight;
  ad::Tensor<T> bias;

  static Dense make(ParameterSet<T>& ps, Rng& rng, const std::string& name, std::size_t in,
                    std::size_t out);
  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
};

// Squeeze (global average pool), reduce C -> C/r, ReLU, expand C/r -> C,
// sigmoid gate, then per-channel rescaling of the input.
template <typename T>
struct ChannelAttention {
  Conv<T> squeeze;
  Conv<T> excite;

  struct Output {
    ad::Tensor<T> gate;    // [N,C,1,1], inside (0,1)
    ad::Tensor<T> scaled;  // gate * input
  };

  static ChannelAttention make(ParameterSet<T>& ps, Rng& rng, const std::string& name,
                               std::size_t channels, std::size_t reduction);
  Output operator()(const ad::Tensor<T>& u) const;
};

template <typename T>
struct ResidualDenseSEBlock {
  std::vector<Conv<T>> stage_convs;             // n-1 stages
  std::vector<ChannelAttention<T>> attention;   // n-1 stages
  Conv<T> fuse;                                 // 1x1, n*C -> C
  ActivationPosition activation = ActivationPosition::kBeforeAttention;

  static ResidualDenseSEBlock make(ParameterSet<T>& ps, Rng& rng, const std::string& name,
                                   const NetworkConfig& cfg);

  struct Trace {
    std::vector<ad::Tensor<T>> stages;  // M_1..M_n
    std::vector<ad::Tensor<T>> gates;   // one per attention stage
    ad::Tensor<T> concatenated;         // [M_1, ..., M_n]
    ad::Tensor<T> output;
  };
  Trace trace(const ad::Tensor<T>& m1) const;
  ad::Tensor<T> operator()(const ad::Tensor<T>& m1) const { return trace(m1).output; }
};

template <typename T>
struct Rdsen {
  Conv<T> shallow;
  std::vector<ResidualDenseSEBlock<T>> blocks;
  Conv<T> body_tail;
  std::vector<Conv<T>> upsample;        // each followed by pixel_shuffle
  std::vector<std::size_t> upsample_factors;
  Conv<T> reconstruct;                  // C -> 3
  LongSkip long_skip = LongSkip::kBeforeConv;

  static Rdsen make(ParameterSet<T>& ps, Rng& rng, const NetworkConfig& cfg,
                    std::size_t in_channels);
  ad::Tensor<T> operator()(const ad::Tensor<T>& x) const;
};

// Pre-demosaicing network: per-colour strided branches on the zero-padded CFA,
// fused and upsampled back, added to the model-based initial demosaic.
template <typename T>
struct PdNet {
  Conv<T> red_down, red_up;
  Conv<T> green_down;
  Conv<T> blue_down, blue_up;
  Conv<T> fuse;
  Conv<T> up;
  Conv<T> project;

  static PdNet make(ParameterSet<T>& ps, Rng& rng, std::size_t width);
  // cfa3: [N,3,H,W] zero-padded mosaic; init: [N,3,H,W]. H,W divisible by 4.
  ad::Tensor<T> operator()(const ad::Tensor<T>& cfa3, const ad::Tensor<T>& init) const;
};

template <typename T>
class Generator {
 public:
  Generator(const NetworkConfig& cfg, std::uint64_t seed);
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;
  Generator(Generator&&) = default;
  Generator& operator=(Generator&&) = default;

  const NetworkConfig& config() const noexcept { return cfg_; }
  ParameterSet<T>& parameters() noexcept { return params_; }
  const ParameterSet<T>& parameters() const noexcept { return params_; }
  const std::optional<PdNet<T>>& pdnet() const noexcept { return pdnet_; }
  const Rdsen<T>& rdsen() const noexcept { return rdsen_; }

  // cfa: [N,3,H,W] (or [N,1,H,W] for the one-channel representation);
  // init: [N,3,H,W] initial demosaic. Returns [N,3,sH,sW].
  ad::Tensor<T> operator()(const ad::Tensor<T>& cfa, const ad::Tensor<T>& init) const;

 private:
  NetworkConfig cfg_;
  ParameterSet<T> params_;
  std::optional<PdNet<T>> pdnet_;
  Rdsen<T> rdsen_;
};

template <typename T>
class Discriminator {
 public:
  Discriminator(const DiscriminatorConfig& cfg, std::size_t input_size, std::uint64_t seed);
  Discriminator(const Discriminator&) = delete;
  Discriminator& operator=(const Discriminator&) = delete;
  Discriminator(Discriminator&&) = default;
  Discriminator& operator=(Discriminator&&) = default;

  const DiscriminatorConfig& config() const noexcept { return cfg_; }
  std::size_t input_size() const noexcept { return input_size_; }
  ParameterSet<T>& parameters() noexcept { return params_; }
  const ParameterSet<T>& parameters() const noexcept { return params_; }
  Dense<T>& output_layer() noexcept { return dense_out_; }

  // img: [N,3,s,s] with s == input_size(). Returns the raw critic scores C(x), shape [N].
  ad::Tensor<T> operator()(const ad::Tensor<T>& img) const;

 private:
  struct Norm {
    ad::Tensor<T> gamma;
    ad::Tensor<T> beta;
  };
  DiscriminatorConfig cfg_;
  std::size_t input_size_;
  ParameterSet<T> params_;
  std::vector<Conv<T>> convs_;
  std::vector<std::optional<Norm>> norms_;
  Dense<T> dense_hidden_;
  Dense<T> dense_out_;
};

// Network inputs for a set of CFA frames: the chosen CFA representation and
// the model-based initial demosaic, both stacked along the batch axis.
template <typename T>
struct GeneratorInputs {
  ad::Tensor<T> cfa;
  ad::Tensor<T> init;
};

template <typename T>
GeneratorInputs<T> make_inputs(const std::vector<cfa::CfaFrame>& frames, const NetworkConfig& cfg,
                               const demosaic::DemosaicMethod& method);

extern template class ParameterSet<float>;
extern template class ParameterSet<double>;
extern template class Generator<float>;
extern template class Generator<double>;
extern template class Discriminator<float>;
extern template class Discriminator<double>;

}  // namespace jdsr::net
