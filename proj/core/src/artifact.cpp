#include "gold/artifact.hpp"

#include <fstream>

#include "gold/error.hpp"

namespace gold {

using nlohmann::json;

json ArtifactMeta::to_json() const {
  return {{"format_version", kFormatVersion}, {"rng_seed", rng_seed}, {"config_digest", config_digest}};
}

ArtifactMeta ArtifactMeta::from_json(const json& j) {
  ArtifactMeta m;
  m.rng_seed = j.value("rng_seed", std::uint64_t{0});
  m.config_digest = j.value("config_digest", std::string{});
  return m;
}

json meta_header(const ArtifactMeta& meta) { return {{"gold_meta", meta.to_json()}}; }

bool is_meta_header(const json& record) { return record.is_object() && record.contains("gold_meta"); }

void write_json_artifact(const std::filesystem::path& path, json doc, const ArtifactMeta& meta) {
  doc["meta"] = meta.to_json();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void write_jsonl_artifact(const std::filesystem::path& path, const std::vector<json>& records,
                          const ArtifactMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << meta_header(meta).dump() << '\n';
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
  }
}

}  // namespace gold
