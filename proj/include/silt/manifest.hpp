// Run manifests: every CLI run writes <output>.manifest.json recording the
// command, resolved options, and the config/vocab hashes, so artifacts can be
// traced back to the exact configuration that produced them.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "silt/common.hpp"

namespace silt {

// Hash of the resolved option map in sorted key=value form.
inline std::uint64_t config_hash(const std::map<std::string, std::string>& options) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [k, v] : options) {
    h = fnv1a64(k, h);
    h = fnv1a64("=", h);
    h = fnv1a64(v, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

inline std::string manifest_path_for(const std::string& artifact_path) {
  return artifact_path + ".manifest.json";
}

inline void write_manifest(const std::string& artifact_path, const std::string& command,
                           const std::map<std::string, std::string>& options,
                           std::optional<std::uint64_t> vocab_hash = std::nullopt) {
  nlohmann::json j;
  j["tool"] = "silt";
  j["command"] = command;
  j["options"] = options;
  j["config_hash"] = hex64(config_hash(options));
  if (vocab_hash) j["vocab_hash"] = hex64(*vocab_hash);
  std::ofstream out(manifest_path_for(artifact_path));
  if (!out) throw DataError("cannot write manifest for: " + artifact_path);
  out << j.dump(2) << "\n";
}

inline std::optional<nlohmann::json> read_manifest(const std::string& artifact_path) {
  std::ifstream in(manifest_path_for(artifact_path));
  if (!in) return std::nullopt;
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed manifest for " + artifact_path + ": " + e.what());
  }
  return j;
}

// Artifacts produced under different vocabularies must not be compared.
inline void check_vocab_hashes_match(const std::vector<std::string>& artifact_paths) {
  std::optional<std::string> seen;
  std::string seen_path;
  for (const auto& path : artifact_paths) {
    auto m = read_manifest(path);
    if (!m || !m->contains("vocab_hash")) continue;
    std::string h = (*m)["vocab_hash"].get<std::string>();
    if (seen && *seen != h)
      throw DataError("vocab hash mismatch between " + seen_path + " (" + *seen + ") and " +
                      path + " (" + h + ")");
    seen = h;
    seen_path = path;
  }
}

}  // namespace silt
