#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace stgen {

inline constexpr const char* kToolVersion = "0.1.0";

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

/// Record of one CLI invocation: inputs, seeds, timings and output hashes.
struct RunManifest {
  std::string command;
  std::vector<std::string> configs;
  std::vector<std::uint64_t> seeds;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> stages;  ///< wall-clock seconds
  std::map<std::string, std::string> outputs;          ///< relative path -> sha256

  /// Hashes `file` (relative to `root`) into outputs.
  void add_output(const std::filesystem::path& root, const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

}  // namespace stgen
