#include "jdsr/network.hpp"

#include <algorithm>
#include <cmath>

#include "jdsr/errors.hpp"
#include "jdsr/ops.hpp"

namespace jdsr::net {

using ad::Tensor;

NetworkConfig NetworkConfig::paper(std::size_t scale) {
  NetworkConfig cfg;
  cfg.scale = scale;
  return cfg;
}

NetworkConfig NetworkConfig::toy(std::size_t scale) {
  NetworkConfig cfg;
  cfg.num_blocks = 2;
  cfg.modules_per_block = 2;
  cfg.channels = 8;
  cfg.reduction = 4;
  cfg.pdnet_width = 8;
  cfg.scale = scale;
  return cfg;
}

NetworkConfig NetworkConfig::effective() const {
  if (!toy_mode) return *this;
  NetworkConfig out = toy(scale);
  out.toy_mode = true;
  out.use_pdnet = use_pdnet;
  out.input = input;
  out.activation_position = activation_position;
  out.long_skip = long_skip;
  return out;
}

void NetworkConfig::validate() const {
  const NetworkConfig e = effective();
  if (e.num_blocks < 1) throw ConfigError("network.num_blocks", "must be >= 1");
  if (e.modules_per_block < 1) throw ConfigError("network.modules_per_block", "must be >= 1");
  if (e.channels < 1) throw ConfigError("network.channels", "must be >= 1");
  if (e.reduction < 1 || e.channels % e.reduction != 0) {
    throw ConfigError("network.reduction", "channels must be divisible by the reduction ratio");
  }
  if (e.scale < 2 || e.scale > 4) throw ConfigError("network.scale", "must be 2, 3 or 4");
  if (e.pdnet_width < 1) throw ConfigError("network.pdnet_width", "must be >= 1");
  if (e.use_pdnet && e.input == InputRepresentation::kOneChannel) {
    throw ConfigError("network.input", "the one-channel representation requires use_pdnet=false");
  }
}

void DiscriminatorConfig::validate() const {
  if (base_channels < 1) throw ConfigError("discriminator.base_channels", "must be >= 1");
  if (dense_units < 1) throw ConfigError("discriminator.dense_units", "must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw ConfigError("discriminator.leaky_slope", "must be in [0,1)");
  }
}

// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> ParameterSet<T>::add(std::string name, ad::Shape shape) {
  for (const auto& e : entries_) {
    if (e.first == name) throw Error("duplicate parameter name '" + name + "'");
  }
  Tensor<T> t(std::move(shape));
  t.set_requires_grad(true);
  entries_.emplace_back(std::move(name), t);
  return t;
}

template <typename T>
std::size_t ParameterSet<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.numel();
  return n;
}

template <typename T>
Tensor<T> ParameterSet<T>::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.first == name) return e.second;
  }
  throw Error("no parameter named '" + name + "'");
}

template <typename T>
void ParameterSet<T>::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

template <typename T>
void ParameterSet<T>::fill(T value) {
  for (auto& e : entries_) {
    auto d = e.second.data();
    std::fill(d.begin(), d.end(), value);
  }
}

template <typename T>
void ParameterSet<T>::save(ad::Checkpoint& ck, const std::string& prefix) const {
  for (const auto& e : entries_) ck.put(prefix + e.first, e.second);
}

template <typename T>
void ParameterSet<T>::load(const ad::Checkpoint& ck, const std::string& prefix) {
  for (auto& e : entries_) {
    const auto name = prefix + e.first;
    if (!ck.contains(name)) throw DataError("checkpoint is missing parameter '" + name + "'");
    const auto loaded = ck.get<T>(name);
    if (loaded.shape() != e.second.shape()) {
      throw DataError("checkpoint parameter '" + name + "' has shape " +
                      ad::to_string(loaded.shape()) + ", expected " +
                      ad::to_string(e.second.shape()));
    }
    auto src = loaded.data();
    std::copy(src.begin(), src.end(), e.second.data().begin());
  }
}

// ---------------------------------------------------------------------------

namespace {

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), the common framework default for conv and
// linear layers. The full He bound sqrt(6/fan_in) compounds through the
// residual-dense blocks and blows the untrained output up by orders of magnitude.
template <typename T>
void fan_in_uniform(Tensor<T>& w, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : w.data()) v = static_cast<T>(rng.uniform(-bound, bound));
}

}  // namespace

template <typename T>
Conv<T> Conv<T>::make(ParameterSet<T>& ps, Rng& rng, const std::string& name, std::size_t in,
                      std::size_t out, std::size_t kernel, std::size_t stride) {
  Conv c;
  c.weight = ps.add(name + ".weight", {out, in, kernel, kernel});
  c.bias = ps.add(name + ".bias", {out});
  c.stride = stride;
  c.padding = kernel / 2;
  fan_in_uniform(c.weight, in * kernel * kernel, rng);
  return c;
}

template <typename T>
Tensor<T> Conv<T>::operator()(const Tensor<T>& x) const {
  return ad::conv2d(x, weight, bias, stride, padding);
}

template <typename T>
Dense<T> Dense<T>::make(ParameterSet<T>& ps, Rng& rng, const std::string& name, std::size_t in,
                        std::size_t out) {
  Dense d;
  d.weight = ps.add(name + ".weight", {out, in});
  d.bias = ps.add(name + ".bias", {out});
  fan_in_uniform(d.weight, in, rng);
  return d;
}

template <typename T>
Tensor<T> Dense<T>::operator()(const Tensor<T>& x) const {
  return ad::linear(x, weight, bias);
}

template <typename T>
ChannelAttention<T> ChannelAttention<T>::make(ParameterSet<T>& ps, Rng& rng,
                                              const std::string& name, std::size_t channels,
                                              std::size_t reduction) {
  ChannelAttention ca;
  ca.squeeze = Conv<T>::make(ps, rng, name + ".squeeze", channels, channels / reduction, 1);
  ca.excite = Conv<T>::make(ps, rng, name + ".excite", channels / reduction, channels, 1);
  return ca;
}

template <typename T>
typename ChannelAttention<T>::Output ChannelAttention<T>::operator()(const Tensor<T>& u) const {
  if (u.rank() != 4 || u.dim(1) != squeeze.weight.dim(1)) {
    throw DimensionError("channel attention: expected " + std::to_string(squeeze.weight.dim(1)) +
                         " channels, got shape " + ad::to_string(u.shape()));
  }
  const auto z = ad::global_avg_pool(u);
  const auto gate = ad::sigmoid(excite(ad::relu(squeeze(z))));
  return {gate, ad::scale_channels(u, gate)};
}

template <typename T>
ResidualDenseSEBlock<T> ResidualDenseSEBlock<T>::make(ParameterSet<T>& ps, Rng& rng,
                                                      const std::string& name,
                                                      const NetworkConfig& cfg) {
  ResidualDenseSEBlock b;
  const std::size_t C = cfg.channels;
  for (std::size_t i = 1; i < cfg.modules_per_block; ++i) {
    const std::string stage = name + ".stage" + std::to_string(i);
    b.stage_convs.push_back(Conv<T>::make(ps, rng, stage + ".conv", C, C, 3));
    b.attention.push_back(ChannelAttention<T>::make(ps, rng, stage + ".ca", C, cfg.reduction));
  }
  b.fuse = Conv<T>::make(ps, rng, name + ".fuse", cfg.modules_per_block * C, C, 1);
  b.activation = cfg.activation_position;
  return b;
}

template <typename T>
typename ResidualDenseSEBlock<T>::Trace ResidualDenseSEBlock<T>::trace(const Tensor<T>& m1) const {
  Trace t;
  t.stages.push_back(m1);
  for (std::size_t i = 0; i < stage_convs.size(); ++i) {
    Tensor<T> u = stage_convs[i](t.stages.back());
    Tensor<T> scaled;
    if (activation == ActivationPosition::kBeforeAttention) {
      auto ca = attention[i](ad::relu(u));
      t.gates.push_back(ca.gate);
      scaled = ca.scaled;
    } else {
      auto ca = attention[i](u);
      t.gates.push_back(ca.gate);
      scaled = ad::relu(ca.scaled);
    }
    t.stages.push_back(ad::add(scaled, m1));
  }
  t.concatenated = t.stages.size() == 1 ? m1 : ad::concat_channels(t.stages);
  t.output = ad::add(fuse(t.concatenated), m1);
  return t;
}

template <typename T>
Rdsen<T> Rdsen<T>::make(ParameterSet<T>& ps, Rng& rng, const NetworkConfig& cfg,
                        std::size_t in_channels) {
  Rdsen r;
  const std::size_t C = cfg.channels;
  r.shallow = Conv<T>::make(ps, rng, "rdsen.shallow", in_channels, C, 3);
  for (std::size_t b = 0; b < cfg.num_blocks; ++b) {
    r.blocks.push_back(
        ResidualDenseSEBlock<T>::make(ps, rng, "rdsen.block" + std::to_string(b), cfg));
  }
  r.body_tail = Conv<T>::make(ps, rng, "rdsen.body_tail", C, C, 3);
  r.upsample_factors = cfg.scale == 4 ? std::vector<std::size_t>{2, 2}
                                      : std::vector<std::size_t>{cfg.scale};
  for (std::size_t i = 0; i < r.upsample_factors.size(); ++i) {
    const std::size_t f = r.upsample_factors[i];
    r.upsample.push_back(
        Conv<T>::make(ps, rng, "rdsen.upsample" + std::to_string(i), C, C * f * f, 3));
  }
  r.reconstruct = Conv<T>::make(ps, rng, "rdsen.reconstruct", C, 3, 3);
  r.long_skip = cfg.long_skip;
  return r;
}

template <typename T>
Tensor<T> Rdsen<T>::operator()(const Tensor<T>& x) const {
  const Tensor<T> shallow_features = shallow(x);
  Tensor<T> h = shallow_features;
  for (const auto& block : blocks) h = block(h);
  if (long_skip == LongSkip::kBeforeConv) {
    h = body_tail(ad::add(h, shallow_features));
  } else {
    h = ad::add(body_tail(h), shallow_features);
  }
  for (std::size_t i = 0; i < upsample.size(); ++i) {
    h = ad::pixel_shuffle(upsample[i](h), upsample_factors[i]);
  }
  return reconstruct(h);
}

template <typename T>
PdNet<T> PdNet<T>::make(ParameterSet<T>& ps, Rng& rng, std::size_t width) {
  PdNet p;
  p.red_down = Conv<T>::make(ps, rng, "pdnet.red_down", 1, width, 3, 4);
  p.red_up = Conv<T>::make(ps, rng, "pdnet.red_up", width, 4 * width, 3);
  p.green_down = Conv<T>::make(ps, rng, "pdnet.green_down", 1, width, 3, 2);
  p.blue_down = Conv<T>::make(ps, rng, "pdnet.blue_down", 1, width, 3, 4);
  p.blue_up = Conv<T>::make(ps, rng, "pdnet.blue_up", width, 4 * width, 3);
  p.fuse = Conv<T>::make(ps, rng, "pdnet.fuse", 3 * width, width, 1);
  p.up = Conv<T>::make(ps, rng, "pdnet.up", width, 4 * width, 3);
  p.project = Conv<T>::make(ps, rng, "pdnet.project", width, 3, 3);
  return p;
}

template <typename T>
Tensor<T> PdNet<T>::operator()(const Tensor<T>& cfa3, const Tensor<T>& init) const {
  if (cfa3.rank() != 4 || cfa3.dim(1) != 3) {
    throw DimensionError("pdnet: expected a [N,3,H,W] mosaic, got " + ad::to_string(cfa3.shape()));
  }
  if (init.shape() != cfa3.shape()) {
    throw DimensionError("pdnet: initial demosaic " + ad::to_string(init.shape()) +
                         " does not match mosaic " + ad::to_string(cfa3.shape()));
  }
  if (cfa3.dim(2) % 4 != 0 || cfa3.dim(3) % 4 != 0) {
    throw DimensionError("pdnet: height and width must be divisible by 4");
  }
  const auto red = ad::slice_channels(cfa3, 0, 1);
  const auto green = ad::slice_channels(cfa3, 1, 1);
  const auto blue = ad::slice_channels(cfa3, 2, 1);
  const auto r = ad::pixel_shuffle(red_up(ad::relu(red_down(red))), 2);
  const auto g = ad::relu(green_down(green));
  const auto b = ad::pixel_shuffle(blue_up(ad::relu(blue_down(blue))), 2);
  const auto fused = ad::relu(fuse(ad::concat_channels<T>({r, g, b})));
  const auto full = ad::pixel_shuffle(up(fused), 2);
  return ad::add(init, project(full));
}

template <typename T>
Generator<T>::Generator(const NetworkConfig& cfg, std::uint64_t seed) : cfg_(cfg.effective()) {
  cfg.validate();
  Rng rng(seed);
  if (cfg_.use_pdnet) pdnet_ = PdNet<T>::make(params_, rng, cfg_.pdnet_width);
  const std::size_t in = cfg_.input == InputRepresentation::kOneChannel ? 1 : 3;
  rdsen_ = Rdsen<T>::make(params_, rng, cfg_, in);
}

template <typename T>
Tensor<T> Generator<T>::operator()(const Tensor<T>& cfa, const Tensor<T>& init) const {
  const std::size_t expected = cfg_.input == InputRepresentation::kOneChannel ? 1 : 3;
  if (cfa.rank() != 4 || cfa.dim(1) != expected) {
    throw DimensionError("generator: expected [N," + std::to_string(expected) +
                         ",H,W] mosaic, got " + ad::to_string(cfa.shape()));
  }
  if (pdnet_) return rdsen_((*pdnet_)(cfa, init));
  return rdsen_(cfa);
}

template <typename T>
Discriminator<T>::Discriminator(const DiscriminatorConfig& cfg, std::size_t input_size,
                                std::uint64_t seed)
    : cfg_(cfg), input_size_(input_size) {
  cfg.validate();
  if (input_size < 1) throw ConfigError("discriminator", "input size must be positive");
  Rng rng(seed);
  const std::size_t b = cfg.base_channels;
  const std::size_t widths[8] = {b, b, 2 * b, 2 * b, 4 * b, 4 * b, 8 * b, 8 * b};
  std::size_t in = 3;
  std::size_t spatial = input_size;
  for (std::size_t i = 0; i < 8; ++i) {
    const std::size_t stride = i % 2 == 0 ? 1 : 2;
    const std::string name = "disc.conv" + std::to_string(i);
    convs_.push_back(Conv<T>::make(params_, rng, name, in, widths[i], 3, stride));
    if (i > 0 && cfg.batch_norm) {
      Norm n{params_.add(name + ".bn.gamma", {widths[i]}), params_.add(name + ".bn.beta", {widths[i]})};
      auto g = n.gamma.data();
      std::fill(g.begin(), g.end(), T{1});
      norms_.emplace_back(n);
    } else {
      norms_.emplace_back(std::nullopt);
    }
    if (stride == 2) spatial = (spatial - 1) / 2 + 1;
    in = widths[i];
  }
  dense_hidden_ = Dense<T>::make(params_, rng, "disc.dense_hidden", in * spatial * spatial,
                                 cfg.dense_units);
  dense_out_ = Dense<T>::make(params_, rng, "disc.dense_out", cfg.dense_units, 1);
}

template <typename T>
Tensor<T> Discriminator<T>::operator()(const Tensor<T>& img) const {
  if (img.rank() != 4 || img.dim(1) != 3 || img.dim(2) != input_size_ ||
      img.dim(3) != input_size_) {
    throw DimensionError("discriminator: expected [N,3," + std::to_string(input_size_) + "," +
                         std::to_string(input_size_) + "] input, got " +
                         ad::to_string(img.shape()));
  }
  const T slope = static_cast<T>(cfg_.leaky_slope);
  Tensor<T> h = img;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i](h);
    if (norms_[i]) h = ad::batch_norm2d(h, norms_[i]->gamma, norms_[i]->beta);
    h = ad::leaky_relu(h, slope);
  }
  const std::size_t n = h.dim(0);
  h = ad::reshape(h, {n, h.numel() / n});
  h = ad::leaky_relu(dense_hidden_(h), slope);
  return ad::reshape(dense_out_(h), {n});
}

template <typename T>
GeneratorInputs<T> make_inputs(const std::vector<cfa::CfaFrame>& frames, const NetworkConfig& cfg,
                               const demosaic::DemosaicMethod& method) {
  if (frames.empty()) throw DimensionError("make_inputs: no frames");
  const bool one_channel = cfg.input == InputRepresentation::kOneChannel;
  const std::size_t h = frames[0].height, w = frames[0].width;
  const std::size_t channels = one_channel ? 1 : 3;
  std::vector<T> cfa_values;
  cfa_values.reserve(frames.size() * channels * h * w);
  std::vector<cfa::RgbImage> inits;
  for (const auto& f : frames) {
    if (f.height != h || f.width != w) throw DimensionError("make_inputs: frame sizes differ");
    const auto t = one_channel ? cfa::collapse_one_channel<T>(f) : cfa::expand_three_channel<T>(f);
    cfa_values.insert(cfa_values.end(), t.data().begin(), t.data().end());
    inits.push_back(demosaic::demosaic(f, method));
  }
  return {Tensor<T>({frames.size(), channels, h, w}, std::move(cfa_values)),
          cfa::stack<T>(inits)};
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template struct Conv<float>;
template struct Conv<double>;
template struct Dense<float>;
template struct Dense<double>;
template struct ChannelAttention<float>;
template struct ChannelAttention<double>;
template struct ResidualDenseSEBlock<float>;
template struct ResidualDenseSEBlock<double>;
template struct Rdsen<float>;
template struct Rdsen<double>;
template struct PdNet<float>;
template struct PdNet<double>;
template class Generator<float>;
template class Generator<double>;
template class Discriminator<float>;
template class Discriminator<double>;
template GeneratorInputs<float> make_inputs<float>(const std::vector<cfa::CfaFrame>&,
                                                   const NetworkConfig&,
                                                   const demosaic::DemosaicMethod&);
template GeneratorInputs<double> make_inputs<double>(const std::vector<cfa::CfaFrame>&,
                                                     const NetworkConfig&,
                                                     const demosaic::DemosaicMethod&);

}  // namespace jdsr::net
