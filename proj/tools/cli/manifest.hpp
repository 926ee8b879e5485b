#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cdalab::cli {

/// Lower-case hex SHA-256 of a file's bytes. Throws DataError if unreadable.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_text(const std::string& text);

struct ManifestFile {
  std::string path;
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string code_version;
  std::vector<ManifestFile> inputs;
  std::vector<ManifestFile> outputs;
  std::string started_at;
  std::string finished_at;
};

std::string utc_timestamp();

ManifestFile describe_file(const std::filesystem::path& path, const std::filesystem::path& relative_to = {});

/// Writes manifest.json into `dir`, listing `outputs` (relative to `dir`).
void write_manifest(const std::filesystem::path& dir, RunManifest manifest,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace cdalab::cli
