#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace chdzdt::cli {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

// One per invocation, written next to the primary output.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand);

  void set_config(nlohmann::json config) { config_ = std::move(config); }
  void set_seed(std::uint64_t seed) { seed_ = seed; }
  // Directories contribute every regular file below them, in path order.
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  // Stamps the end time and writes atomically.
  void write(const std::filesystem::path& path);

 private:
  std::string subcommand_;
  nlohmann::json config_ = nlohmann::json::object();
  std::uint64_t seed_ = 42;
  std::vector<std::pair<std::string, std::string>> inputs_;  // path, digest
  std::vector<std::string> outputs_;
  std::chrono::system_clock::time_point start_, end_;
};

// x/report.json -> x/report.manifest.json
std::filesystem::path manifest_path_for(const std::filesystem::path& output);

}  // namespace chdzdt::cli
