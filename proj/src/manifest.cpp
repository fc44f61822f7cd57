#include "stgen/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>

#include "json_util.hpp"
#include "stgen/error.hpp"
#include "text_util.hpp"

namespace stgen {

namespace {

struct DigestDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

std::string to_hex(const unsigned char* data, unsigned int len) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kDigits[data[i] >> 4];
    out += kDigits[data[i] & 0xF];
  }
  return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx(EVP_MD_CTX_new());
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  return to_hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, DigestDeleter> ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw NumericalError("SHA-256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw NumericalError("SHA-256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw NumericalError("SHA-256 final failed");
  return to_hex(md.data(), len);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp";
  detail::write_file(tmp, data);
  std::filesystem::rename(tmp, path);
}

void RunManifest::add_output(const std::filesystem::path& root, const std::filesystem::path& file) {
  outputs[std::filesystem::relative(file, root).generic_string()] = sha256_file(file);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "stgen";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["configs"] = configs;
  j["seeds"] = seeds;
  j["parameters"] = parameters;
  j["stages"] = nlohmann::json::array();
  for (const auto& [name, seconds] : stages) j["stages"].push_back({{"name", name}, {"seconds", seconds}});
  j["outputs"] = outputs;
  return j;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, m.to_json().dump(2) + "\n");
}

RunManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  RunManifest m;
  m.command = detail::required<std::string>(j, "command");
  m.configs = detail::optional_or(j, "configs", std::vector<std::string>{});
  m.seeds = detail::optional_or(j, "seeds", std::vector<std::uint64_t>{});
  m.parameters = detail::optional_or(j, "parameters", nlohmann::json::object());
  for (const auto& s : detail::optional_or(j, "stages", nlohmann::json::array())) {
    m.stages.emplace_back(detail::required<std::string>(s, "name"), detail::required<double>(s, "seconds"));
  }
  m.outputs = detail::optional_or(j, "outputs", std::map<std::string, std::string>{});
  return m;
}

}  // namespace stgen
