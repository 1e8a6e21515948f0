#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace gold {

inline constexpr int kFormatVersion = 1;

// Stamped into every file the tools write.
struct ArtifactMeta {
  std::uint64_t rng_seed = 0;
  std::string config_digest;

  nlohmann::json to_json() const;
  static ArtifactMeta from_json(const nlohmann::json& j);
};

// JSON-lines artifacts open with {"gold_meta": {...}}; readers skip it.
nlohmann::json meta_header(const ArtifactMeta& meta);
bool is_meta_header(const nlohmann::json& record);

// Writes `doc` with a "meta" member, pretty-printed, trailing newline.
void write_json_artifact(const std::filesystem::path& path, nlohmann::json doc, const ArtifactMeta& meta);
void write_jsonl_artifact(const std::filesystem::path& path, const std::vector<nlohmann::json>& records,
                          const ArtifactMeta& meta);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace gold
