#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <fstream>
#include <json.hpp>

#include "cdalab/error.hpp"

namespace cdalab::cli {

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;

  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }

  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
      s += digits[md[i] >> 4];
      s += digits[md[i] & 15];
    }
    return s;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  Digest d;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

std::string sha256_text(const std::string& text) {
  Digest d;
  d.update(text.data(), text.size());
  return d.hex();
}

std::string utc_timestamp() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto day = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{now - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

ManifestFile describe_file(const std::filesystem::path& path, const std::filesystem::path& relative_to) {
  ManifestFile f;
  f.path = relative_to.empty() ? path.string() : std::filesystem::relative(path, relative_to).generic_string();
  f.sha256 = sha256_file(path);
  f.bytes = std::filesystem::file_size(path);
  return f;
}

void write_manifest(const std::filesystem::path& dir, RunManifest m, const std::vector<std::filesystem::path>& outputs) {
  for (const auto& p : outputs) m.outputs.push_back(describe_file(p, dir));
  auto files = [](const std::vector<ManifestFile>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& f : v) a.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    return a;
  };
  const nlohmann::json j = {
      {"command", m.command},
      {"arguments", m.arguments},
      {"config_digest", m.config_digest},
      {"seed", m.seed},
      {"code_version", m.code_version},
      {"inputs", files(m.inputs)},
      {"outputs", files(m.outputs)},
      {"started_at", m.started_at},
      {"finished_at", m.finished_at},
  };
  std::ofstream out(dir / "manifest.json");
  if (!out) throw DataError("cannot write manifest in '" + dir.string() + "'");
  out << j.dump(2) << '\n';
}

}  // namespace cdalab::cli
