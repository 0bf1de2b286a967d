#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "prism/audit/config.hpp"

namespace prism::audit {

struct ArtifactRecord {
  std::string sha256;
  std::uintmax_t bytes = 0;
  // Stage parameters that produced the artifact (e.g. lambda and tau for a distilled model).
  std::map<std::string, std::string> params;

  friend bool operator==(const ArtifactRecord&, const ArtifactRecord&) = default;
};

// manifest.json at the root of a run directory. Paths are relative to the root and use '/'.
// Everything in it is a function of configs and seeds; wall-clock timings live in timings.json.
class Manifest {
 public:
  static constexpr const char* kFileName = "manifest.json";
  static constexpr const char* kTimingsFileName = "timings.json";

  Manifest() = default;
  Manifest(std::filesystem::path root, const RunConfig& config);

  // Throws DataError when the run directory has no manifest or it is malformed.
  static Manifest load(const std::filesystem::path& root);
  void save() const;

  const std::filesystem::path& root() const { return root_; }
  const std::string& run_id() const { return run_id_; }
  const std::string& config_text() const { return config_text_; }
  const std::map<std::string, ArtifactRecord>& artifacts() const { return artifacts_; }

  std::filesystem::path path_of(const std::string& rel) const { return root_ / rel; }
  bool has(const std::string& rel) const { return artifacts_.contains(rel); }

  // Hashes the file at root/rel and records it.
  const ArtifactRecord& record(const std::string& rel, std::map<std::string, std::string> params = {});
  // Throws DataError if the artifact is unrecorded, missing on disk or its digest differs.
  std::filesystem::path verified(const std::string& rel) const;
  // Checks every recorded artifact; returns the first failure message, if any.
  std::optional<std::string> verify_all() const;

  // Adds (or replaces) a wall-clock timing in timings.json.
  void add_timing(const std::string& stage, double seconds) const;

  static std::string run_id_for(const RunConfig& config);

 private:
  std::filesystem::path root_;
  std::string run_id_;
  std::string config_text_;
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> config_;
  std::map<std::string, ArtifactRecord> artifacts_;
};

}  // namespace prism::audit
