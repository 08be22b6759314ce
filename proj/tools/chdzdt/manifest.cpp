#include "manifest.hpp"

#include <algorithm>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "chdzdt/error.hpp"
#include "chdzdt/io.hpp"

namespace chdzdt::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 failed");
  }
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return s.str();
}

std::string sha256_file(const fs::path& path) { return sha256_hex(io::read_file(path)); }

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

RunManifest::RunManifest(std::string subcommand)
    : subcommand_(std::move(subcommand)), start_(std::chrono::system_clock::now()) {}

void RunManifest::add_input(const fs::path& path) {
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) inputs_.emplace_back(f.string(), sha256_file(f));
    return;
  }
  inputs_.emplace_back(path.string(), sha256_file(path));
}

void RunManifest::add_output(const fs::path& path) { outputs_.push_back(path.string()); }

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [p, d] : inputs_) inputs.push_back({{"path", p}, {"sha256", d}});
  return {{"subcommand", subcommand_},
          {"config", config_},
          {"inputs", inputs},
          {"outputs", outputs_},
          {"seed", seed_},
          {"version", CHDZDT_VERSION},
          {"started", iso8601(start_)},
          {"finished", iso8601(end_)}};
}

void RunManifest::write(const fs::path& path) {
  end_ = std::chrono::system_clock::now();
  io::write_file_atomic(path, to_json().dump(2) + "\n");
}

fs::path manifest_path_for(const fs::path& output) {
  auto p = output;
  if (fs::is_directory(output)) return output / "manifest.json";
  return p.replace_extension(".manifest.json");
}

}  // namespace chdzdt::cli
