#include "jdsr/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "jdsr/errors.hpp"
#include "jdsr/manifest.hpp"
#include "json.hpp"

namespace jdsr::config {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Requires an object whose keys are all in `allowed`.
const json& object(const json& j, const std::string& path,
                   std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError(join(path, it.key()), "unknown key");
  }
  return j;
}

void read(const json& j, const std::string& path, const char* key, bool& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(join(path, key), "expected a boolean");
  out = v.get<bool>();
}

void read(const json& j, const std::string& path, const char* key, double& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
  out = v.get<double>();
  if (!std::isfinite(out)) throw ConfigError(join(path, key), "must be finite");
}

void read(const json& j, const std::string& path, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) {
    throw ConfigError(join(path, key), "expected a non-negative integer");
  }
  out = v.get<std::uint64_t>();
}

void read(const json& j, const std::string& path, const char* key, std::string& out) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
  out = v.get<std::string>();
}

template <typename E, typename Parse>
void read_enum(const json& j, const std::string& path, const char* key, E& out, Parse parse) {
  if (!j.contains(key)) return;
  std::string s;
  read(j, path, key, s);
  try {
    out = parse(s);
  } catch (const ConfigError& e) {
    // Already carries a path; rebase it onto this key.
    const std::string prefix = e.path() + ": ";
    std::string what = e.what();
    if (what.rfind(prefix, 0) == 0) what.erase(0, prefix.size());
    throw ConfigError(join(path, key), what);
  } catch (const Error& e) {
    throw ConfigError(join(path, key), e.what());
  }
}

net::InputRepresentation parse_input(const std::string& s) {
  if (s == "three-channel") return net::InputRepresentation::kThreeChannel;
  if (s == "one-channel") return net::InputRepresentation::kOneChannel;
  throw Error("expected three-channel or one-channel");
}
std::string to_string(net::InputRepresentation v) {
  return v == net::InputRepresentation::kThreeChannel ? "three-channel" : "one-channel";
}

net::ActivationPosition parse_activation(const std::string& s) {
  if (s == "before-attention") return net::ActivationPosition::kBeforeAttention;
  if (s == "after-attention") return net::ActivationPosition::kAfterAttention;
  throw Error("expected before-attention or after-attention");
}
std::string to_string(net::ActivationPosition v) {
  return v == net::ActivationPosition::kBeforeAttention ? "before-attention" : "after-attention";
}

net::LongSkip parse_long_skip(const std::string& s) {
  if (s == "before-conv") return net::LongSkip::kBeforeConv;
  if (s == "after-conv") return net::LongSkip::kAfterConv;
  throw Error("expected before-conv or after-conv");
}
std::string to_string(net::LongSkip v) {
  return v == net::LongSkip::kBeforeConv ? "before-conv" : "after-conv";
}

void parse_network(const json& j, const std::string& p, net::NetworkConfig& n) {
  object(j, p, {"num_blocks", "modules_per_block", "channels", "reduction", "scale",
                "pdnet_width", "toy_mode", "use_pdnet", "input", "block", "long_skip"});
  read(j, p, "num_blocks", n.num_blocks);
  read(j, p, "modules_per_block", n.modules_per_block);
  read(j, p, "channels", n.channels);
  read(j, p, "reduction", n.reduction);
  read(j, p, "scale", n.scale);
  read(j, p, "pdnet_width", n.pdnet_width);
  read(j, p, "toy_mode", n.toy_mode);
  read(j, p, "use_pdnet", n.use_pdnet);
  read_enum(j, p, "input", n.input, parse_input);
  read_enum(j, p, "long_skip", n.long_skip, parse_long_skip);
  if (j.contains("block")) {
    const auto bp = join(p, "block");
    object(j.at("block"), bp, {"activation_position"});
    read_enum(j.at("block"), bp, "activation_position", n.activation_position, parse_activation);
  }
}

void parse_discriminator(const json& j, const std::string& p, net::DiscriminatorConfig& d) {
  object(j, p, {"base_channels", "dense_units", "batch_norm", "leaky_slope"});
  read(j, p, "base_channels", d.base_channels);
  read(j, p, "dense_units", d.dense_units);
  read(j, p, "batch_norm", d.batch_norm);
  read(j, p, "leaky_slope", d.leaky_slope);
}

void parse_loss(const json& j, const std::string& p, LossConfig& l) {
  object(j, p, {"lambda_adv", "lambda_l1", "gamma", "clamp_eps", "adversarial", "extractor"});
  read(j, p, "lambda_adv", l.weights.lambda_adv);
  read(j, p, "lambda_l1", l.weights.lambda_l1);
  read(j, p, "gamma", l.weights.gamma);
  read(j, p, "clamp_eps", l.weights.clamp_eps);
  read_enum(j, p, "adversarial", l.adversarial, loss::parse_adversarial);
  if (j.contains("extractor")) {
    const auto ep = join(p, "extractor");
    const auto& e = object(j.at("extractor"), ep, {"kind", "layer", "width", "seed", "weights"});
    read(e, ep, "kind", l.extractor.kind);
    read(e, ep, "layer", l.extractor.layer);
    read(e, ep, "width", l.extractor.width);
    read(e, ep, "seed", l.extractor.seed);
    read(e, ep, "weights", l.extractor.weights);
  }
}

void parse_trainer(const json& j, const std::string& p, TrainerConfig& t) {
  object(j, p, {"schedule", "batch_size", "patch_size", "pretrain_steps", "adversarial_steps",
                "d_steps_per_g", "grad_clip", "augment"});
  if (j.contains("schedule")) {
    const auto sp = join(p, "schedule");
    const auto& s = object(j.at("schedule"), sp, {"lr", "milestones", "divisor", "factor"});
    read(s, sp, "lr", t.schedule.lr);
    read(s, sp, "divisor", t.schedule.divisor);
    read(s, sp, "factor", t.schedule.factor);
    if (s.contains("milestones")) {
      const auto mp = join(sp, "milestones");
      const auto& m = s.at("milestones");
      if (!m.is_array()) throw ConfigError(mp, "expected an array");
      t.schedule.milestones.clear();
      for (std::size_t i = 0; i < m.size(); ++i) {
        const auto ip = mp + "[" + std::to_string(i) + "]";
        if (!m[i].is_number_unsigned()) throw ConfigError(ip, "expected a non-negative integer");
        t.schedule.milestones.push_back(m[i].get<std::uint64_t>());
      }
    }
  }
  read(j, p, "batch_size", t.batch_size);
  read(j, p, "patch_size", t.patch_size);
  read(j, p, "pretrain_steps", t.pretrain_steps);
  read(j, p, "adversarial_steps", t.adversarial_steps);
  read(j, p, "d_steps_per_g", t.d_steps_per_g);
  read(j, p, "grad_clip", t.grad_clip);
  read(j, p, "augment", t.augment);
}

void parse_data(const json& j, const std::string& p, DataConfig& d) {
  object(j, p, {"train", "synthetic", "phase"});
  if (j.contains("train")) {
    const auto tp = join(p, "train");
    const auto& t = j.at("train");
    if (!t.is_array()) throw ConfigError(tp, "expected an array of paths");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].is_string()) {
        throw ConfigError(tp + "[" + std::to_string(i) + "]", "expected a string");
      }
      d.train.push_back(t[i].get<std::string>());
    }
  }
  if (j.contains("synthetic")) {
    const auto sp = join(p, "synthetic");
    const auto& s = object(j.at("synthetic"), sp, {"count", "size", "seed"});
    read(s, sp, "count", d.synthetic.count);
    read(s, sp, "size", d.synthetic.size);
    read(s, sp, "seed", d.synthetic.seed);
  }
  read_enum(j, p, "phase", d.phase, [](const std::string& s) { return cfa::parse_phase(s); });
}

void parse_demosaic(const json& j, const std::string& p, demosaic::DemosaicMethod& m) {
  object(j, p, {"method", "iterations"});
  std::string name(m.name());
  std::uint64_t iterations = static_cast<std::uint64_t>(m.iterations);
  read(j, p, "method", name);
  if (!j.contains("iterations") && name == "residual-refine") iterations = 2;
  read(j, p, "iterations", iterations);
  if (iterations < 1 || iterations > 100) throw ConfigError(join(p, "iterations"), "must be in 1..100");
  try {
    m = demosaic::DemosaicMethod::parse(name, static_cast<int>(iterations));
  } catch (const Error& e) {
    throw ConfigError(join(p, "method"), e.what());
  }
}

void parse_metrics(const json& j, const std::string& p, MetricsConfig& m) {
  object(j, p, {"crop_border", "ssim_mode"});
  read(j, p, "crop_border", m.crop_border);
  read_enum(j, p, "ssim_mode", m.ssim_mode, metrics::parse_ssim_mode);
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  discriminator.validate();
  loss.weights.validate();
  loss.extractor.validate();
  const auto& s = trainer.schedule;
  if (!(s.lr > 0)) throw ConfigError("trainer.schedule.lr", "must be > 0");
  if (!(s.divisor >= 1)) throw ConfigError("trainer.schedule.divisor", "must be >= 1");
  if (!(s.factor > 0 && s.factor <= 1)) throw ConfigError("trainer.schedule.factor", "must be in (0,1]");
  const auto scaled = scaled_milestones(s);
  for (std::size_t i = 1; i < scaled.size(); ++i) {
    if (scaled[i] <= scaled[i - 1]) {
      throw ConfigError("trainer.schedule.milestones",
                        "must be strictly increasing after division by the divisor");
    }
  }
  if (trainer.batch_size < 1) throw ConfigError("trainer.batch_size", "must be >= 1");
  if (trainer.patch_size < 4 || trainer.patch_size % 4 != 0) {
    throw ConfigError("trainer.patch_size", "must be a positive multiple of 4");
  }
  if (trainer.d_steps_per_g < 1) throw ConfigError("trainer.d_steps_per_g", "must be >= 1");
  if (trainer.grad_clip < 0) throw ConfigError("trainer.grad_clip", "must be >= 0");
  if (data.synthetic.count > 0 && data.synthetic.size < 2 * network.scale) {
    throw ConfigError("data.synthetic.size", "too small for the scale factor");
  }
}

RunConfig parse(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  object(j, "", {"seed", "network", "discriminator", "loss", "trainer", "data", "demosaic",
                 "metrics"});
  RunConfig cfg;
  read(j, "", "seed", cfg.seed);
  if (j.contains("network")) parse_network(j.at("network"), "network", cfg.network);
  if (j.contains("discriminator")) {
    parse_discriminator(j.at("discriminator"), "discriminator", cfg.discriminator);
  }
  if (j.contains("loss")) parse_loss(j.at("loss"), "loss", cfg.loss);
  if (j.contains("trainer")) parse_trainer(j.at("trainer"), "trainer", cfg.trainer);
  if (j.contains("data")) parse_data(j.at("data"), "data", cfg.data);
  if (j.contains("demosaic")) parse_demosaic(j.at("demosaic"), "demosaic", cfg.demosaic);
  if (j.contains("metrics")) parse_metrics(j.at("metrics"), "metrics", cfg.metrics);
  cfg.validate();
  return cfg;
}

RunConfig load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("<file>", "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string dump(const RunConfig& c) {
  const auto& n = c.network;
  json j;
  j["seed"] = c.seed;
  j["network"] = {{"num_blocks", n.num_blocks},
                  {"modules_per_block", n.modules_per_block},
                  {"channels", n.channels},
                  {"reduction", n.reduction},
                  {"scale", n.scale},
                  {"pdnet_width", n.pdnet_width},
                  {"toy_mode", n.toy_mode},
                  {"use_pdnet", n.use_pdnet},
                  {"input", to_string(n.input)},
                  {"block", {{"activation_position", to_string(n.activation_position)}}},
                  {"long_skip", to_string(n.long_skip)}};
  j["discriminator"] = {{"base_channels", c.discriminator.base_channels},
                        {"dense_units", c.discriminator.dense_units},
                        {"batch_norm", c.discriminator.batch_norm},
                        {"leaky_slope", c.discriminator.leaky_slope}};
  const auto& e = c.loss.extractor;
  j["loss"] = {{"lambda_adv", c.loss.weights.lambda_adv},
               {"lambda_l1", c.loss.weights.lambda_l1},
               {"gamma", c.loss.weights.gamma},
               {"clamp_eps", c.loss.weights.clamp_eps},
               {"adversarial", loss::to_string(c.loss.adversarial)},
               {"extractor",
                {{"kind", e.kind}, {"layer", e.layer}, {"width", e.width}, {"seed", e.seed},
                 {"weights", e.weights}}}};
  const auto& t = c.trainer;
  j["trainer"] = {{"schedule",
                   {{"lr", t.schedule.lr},
                    {"milestones", t.schedule.milestones},
                    {"divisor", t.schedule.divisor},
                    {"factor", t.schedule.factor}}},
                  {"batch_size", t.batch_size},
                  {"patch_size", t.patch_size},
                  {"pretrain_steps", t.pretrain_steps},
                  {"adversarial_steps", t.adversarial_steps},
                  {"d_steps_per_g", t.d_steps_per_g},
                  {"grad_clip", t.grad_clip},
                  {"augment", t.augment}};
  j["data"] = {{"train", c.data.train},
               {"synthetic",
                {{"count", c.data.synthetic.count},
                 {"size", c.data.synthetic.size},
                 {"seed", c.data.synthetic.seed}}},
               {"phase", std::string(cfa::to_string(c.data.phase))}};
  j["demosaic"] = {{"method", std::string(c.demosaic.name())},
                   {"iterations", c.demosaic.iterations}};
  j["metrics"] = {{"crop_border", c.metrics.crop_border},
                  {"ssim_mode", metrics::to_string(c.metrics.ssim_mode)}};
  return j.dump(2);
}

std::string hash(const RunConfig& cfg) {
  const auto text = dump(cfg);
  return io::sha256_hex(text.data(), text.size());
}

std::vector<std::uint64_t> scaled_milestones(const ScheduleConfig& s) {
  std::vector<std::uint64_t> out;
  for (auto m : s.milestones) {
    out.push_back(static_cast<std::uint64_t>(std::floor(static_cast<double>(m) / s.divisor)));
  }
  return out;
}

}  // namespace jdsr::config
