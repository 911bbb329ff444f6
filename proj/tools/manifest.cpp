#include "manifest.hpp"

#include "hurdlenet/netpanel.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>

#ifndef HURDLENET_VERSION
#define HURDLENET_VERSION "0.0.0"
#endif

namespace hurdlenet::cli {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::string hex;
  char byte[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(byte, sizeof byte, "%02x", md[k]);
    hex += byte;
  }
  return hex;
}

Manifest::Manifest(std::string command)
    : command_(std::move(command)), start_(std::chrono::steady_clock::now()), start_wall_(std::chrono::system_clock::now()) {}

void Manifest::config(const std::string& key, const std::string& value) { config_.emplace_back(key, value); }

void Manifest::seed(const std::string& role, std::uint64_t value) { seeds_.emplace_back(role, std::to_string(value)); }

void Manifest::input(const fs::path& path) {
  inputs_.emplace_back(fs::absolute(path).lexically_normal().string(), sha256_file(path));
}

void Manifest::result(const std::string& key, const std::string& value) { results_.emplace_back(key, value); }

void Manifest::write(const fs::path& dir) const {
  std::vector<fs::path> outputs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() != file_name) outputs.push_back(entry.path());
  }
  std::sort(outputs.begin(), outputs.end());

  const auto path = dir / file_name;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "command=" << command_ << '\n';
  out << "version=" << HURDLENET_VERSION << '\n';
  for (const auto& [k, v] : config_) out << "config." << k << '=' << v << '\n';
  for (const auto& [k, v] : seeds_) out << "seed." << k << '=' << v << '\n';
  for (const auto& [k, v] : inputs_) out << "input." << k << '=' << v << '\n';
  for (const auto& [k, v] : results_) out << "result." << k << '=' << v << '\n';
  for (const auto& p : outputs) out << "output." << p.filename().string() << '=' << sha256_file(p) << '\n';

  const std::time_t started = std::chrono::system_clock::to_time_t(start_wall_);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&started));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  out << "started=" << stamp << '\n';
  out << "wall_clock_seconds=" << elapsed << '\n';
}

ManifestData read_manifest(const fs::path& dir) {
  const auto path = dir / Manifest::file_name;
  std::ifstream in(path);
  if (!in) throw DataError("missing " + path.string());
  ManifestData m;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

const std::string& manifest_value(const ManifestData& m, const std::string& key, const fs::path& dir) {
  const auto it = m.find(key);
  if (it == m.end()) throw DataError((dir / Manifest::file_name).string() + ": missing key '" + key + "'");
  return it->second;
}

}  // namespace hurdlenet::cli
