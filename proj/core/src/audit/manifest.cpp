#include "prism/audit/manifest.hpp"

#include <nlohmann/json.hpp>

#include "prism/codec.hpp"
#include "prism/errors.hpp"
#include "prism/rng.hpp"
#include "prism/version.hpp"

namespace prism::audit {

using nlohmann::json;
namespace fs = std::filesystem;

Manifest::Manifest(fs::path root, const RunConfig& config)
    : root_(std::move(root)),
      run_id_(run_id_for(config)),
      config_text_(format_config(config)),
      config_(config_entries(config)) {}

std::string Manifest::run_id_for(const RunConfig& config) {
  return codec::sha256_hex(format_config(config)).substr(0, 16);
}

void Manifest::save() const {
  json j;
  j["format"] = "prism-manifest";
  j["version"] = 1;
  j["toolkit_version"] = std::string(prism::version());
  j["run_id"] = run_id_;
  j["rng"] = SplitMix64::kName;
  json cfg = json::object();
  for (const auto& [section, fields] : config_) {
    json s = json::object();
    for (const auto& [k, v] : fields) s[k] = v;
    cfg[section] = s;
  }
  j["config"] = cfg;
  json arts = json::object();
  for (const auto& [rel, a] : artifacts_) {
    json r;
    r["sha256"] = a.sha256;
    r["bytes"] = a.bytes;
    if (!a.params.empty()) r["params"] = a.params;
    arts[rel] = r;
  }
  j["artifacts"] = arts;
  j["timings"] = kTimingsFileName;
  codec::write_file(root_ / kFileName, j.dump(2) + "\n");
}

Manifest Manifest::load(const fs::path& root) {
  const auto path = root / kFileName;
  if (!fs::exists(path))
    throw DataError("no " + std::string(kFileName) + " in '" + root.string() + "'; run `simulate` first");
  Manifest m;
  m.root_ = root;
  try {
    const json j = json::parse(codec::read_file(path));
    if (j.at("format") != "prism-manifest") throw DataError("not a prism manifest");
    m.run_id_ = j.at("run_id").get<std::string>();
    for (const auto& [section, fields] : j.at("config").items()) {
      auto& sec = m.config_.emplace_back(section, std::vector<std::pair<std::string, std::string>>{}).second;
      for (const auto& [k, v] : fields.items()) sec.emplace_back(k, v.get<std::string>());
    }
    for (const auto& [rel, r] : j.at("artifacts").items()) {
      ArtifactRecord a;
      a.sha256 = r.at("sha256").get<std::string>();
      a.bytes = r.at("bytes").get<std::uintmax_t>();
      if (r.contains("params")) a.params = r.at("params").get<std::map<std::string, std::string>>();
      m.artifacts_[rel] = a;
    }
  } catch (const json::exception& e) {
    throw DataError("malformed manifest '" + path.string() + "': " + e.what());
  }
  // json objects are key-sorted; restore file order of config sections for config_text.
  const RunConfig defaults = default_config();
  std::string text;
  for (const auto& [section, _] : config_entries(defaults)) {
    for (const auto& [name, fields] : m.config_) {
      if (name != section) continue;
      if (!text.empty()) text += '\n';
      text += "[" + name + "]\n";
      for (const auto& [k, v] : fields) text += k + " = " + v + "\n";
    }
  }
  m.config_text_ = text;
  return m;
}

const ArtifactRecord& Manifest::record(const std::string& rel, std::map<std::string, std::string> params) {
  const auto path = root_ / rel;
  ArtifactRecord a;
  a.sha256 = codec::sha256_file(path);
  a.bytes = fs::file_size(path);
  a.params = std::move(params);
  return artifacts_[rel] = std::move(a);
}

fs::path Manifest::verified(const std::string& rel) const {
  auto it = artifacts_.find(rel);
  if (it == artifacts_.end()) throw DataError("artifact '" + rel + "' is not in the run manifest");
  const auto path = root_ / rel;
  if (!fs::exists(path)) throw DataError("artifact '" + rel + "' is missing from '" + root_.string() + "'");
  if (codec::sha256_file(path) != it->second.sha256)
    throw DataError("artifact '" + rel + "' does not match its recorded digest");
  return path;
}

std::optional<std::string> Manifest::verify_all() const {
  for (const auto& [rel, _] : artifacts_) {
    try {
      verified(rel);
    } catch (const DataError& e) {
      return std::string(e.what());
    }
  }
  return std::nullopt;
}

void Manifest::add_timing(const std::string& stage, double seconds) const {
  const auto path = root_ / kTimingsFileName;
  json j = json::object();
  if (fs::exists(path)) {
    try {
      j = json::parse(codec::read_file(path));
    } catch (const json::exception&) {
      j = json::object();
    }
  }
  j[stage] = seconds;
  codec::write_file(path, j.dump(2) + "\n");
}

}  // namespace prism::audit
