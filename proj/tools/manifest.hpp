#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace hurdlenet::cli {

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/**
 * Run record written as `manifest.txt` (one `key=value` per line) into every
 * output directory: command, resolved configuration, seeds, input digests,
 * software version, wall-clock and an inventory of the files produced.
 */
class Manifest {
 public:
  static constexpr const char* file_name = "manifest.txt";

  explicit Manifest(std::string command);

  void config(const std::string& key, const std::string& value);
  void seed(const std::string& role, std::uint64_t value);
  /// Records the digest of an input file under its absolute path.
  void input(const std::filesystem::path& path);
  /// Headline outcome (e.g. divergence rate, selected K), recorded as `result.<key>`.
  void result(const std::string& key, const std::string& value);

  /// Writes the manifest into `dir`; every other regular file directly in `dir`
  /// is listed with its digest.
  void write(const std::filesystem::path& dir) const;

 private:
  std::string command_;
  std::vector<std::pair<std::string, std::string>> config_;
  std::vector<std::pair<std::string, std::string>> seeds_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> results_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::system_clock::time_point start_wall_;
};

/// Parsed manifest; `config.` / `seed.` / `input.` / `result.` / `output.` prefixes are kept.
using ManifestData = std::map<std::string, std::string>;
ManifestData read_manifest(const std::filesystem::path& dir);

/// Value of `key`, or throws DataError naming the manifest.
const std::string& manifest_value(const ManifestData& m, const std::string& key, const std::filesystem::path& dir);

}  // namespace hurdlenet::cli
