#include "jdsr/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <sstream>

#include "jdsr/errors.hpp"
#include "json.hpp"

#ifndef JDSR_GIT_DESCRIBE
#define JDSR_GIT_DESCRIBE "unknown"
#endif

namespace jdsr::io {

using nlohmann::json;

namespace {

struct Digest {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

  Digest() {
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: digest initialisation failed");
    }
  }
  void update(const void* data, std::size_t size) {
    if (EVP_DigestUpdate(ctx.get(), data, size) != 1) throw Error("sha256: update failed");
  }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out += digits[md[i] >> 4];
      out += digits[md[i] & 15];
    }
    return out;
  }
};

}  // namespace

std::string sha256_hex(const void* data, std::size_t size) {
  Digest d;
  d.update(data, size);
  return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string git_describe() { return JDSR_GIT_DESCRIBE; }

void Manifest::add_input(const std::filesystem::path& p) {
  inputs.emplace_back(p.string(), sha256_file(p));
}

void Manifest::add_output(const std::filesystem::path& p) {
  outputs.emplace_back(p.string(), sha256_file(p));
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["seed"] = m.seed;
  j["git_describe"] = git_describe();
  if (!m.config_hash.empty()) j["config_hash"] = m.config_hash;
  if (!m.config_json.empty()) j["config"] = json::parse(m.config_json);
  auto files = [](const auto& list) {
    json arr = json::array();
    for (const auto& [p, h] : list) arr.push_back({{"path", p}, {"sha256", h}});
    return arr;
  };
  j["inputs"] = files(m.inputs);
  j["outputs"] = files(m.outputs);
  for (const auto& [k, v] : m.fields) j["fields"][k] = v;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read manifest " + path.string());
  Manifest m;
  try {
    const json j = json::parse(in);
    m.command = j.value("command", "");
    m.seed = j.value("seed", std::uint64_t{0});
    m.config_hash = j.value("config_hash", "");
    if (j.contains("config")) m.config_json = j.at("config").dump(2);
    for (const char* key : {"inputs", "outputs"}) {
      if (!j.contains(key)) continue;
      auto& list = std::string(key) == "inputs" ? m.inputs : m.outputs;
      for (const auto& e : j.at(key)) {
        list.emplace_back(e.at("path").get<std::string>(), e.at("sha256").get<std::string>());
      }
    }
    if (j.contains("fields")) {
      for (auto it = j.at("fields").begin(); it != j.at("fields").end(); ++it) {
        m.fields[it.key()] = it.value().get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path.string() + ": " + e.what());
  }
  return m;
}

std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".manifest.json";
  return p;
}

}  // namespace jdsr::io
