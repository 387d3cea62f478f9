#pragma once

// Provenance records written next to every artifact: command, config hash,
// seed, source revision and content hashes of inputs and outputs.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace jdsr::io {

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::filesystem::path& path);

// `git describe` of the source tree at configure time, or "unknown".
std::string git_describe();

struct Manifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string config_json;  // snapshot, embedded as an object when non-empty
  std::vector<std::pair<std::string, std::string>> inputs;   // path, sha256
  std::vector<std::pair<std::string, std::string>> outputs;  // path, sha256
  std::map<std::string, std::string> fields;                 // command-specific

  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);
Manifest read_manifest(const std::filesystem::path& path);

// <artifact>.manifest.json
std::filesystem::path sidecar_path(const std::filesystem::path& artifact);

}  // namespace jdsr::io
