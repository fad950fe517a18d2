#pragma once

// Experiment config: JSON with schema_version 1, strict keys.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fqk/propagator.hpp"

namespace fqk::cli {

inline constexpr const char* kToolVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads keys from one JSON object, remembers which were used, and rejects
/// the rest in finish().
class Section {
 public:
  Section(const nlohmann::json& obj, std::string path);

  bool has(const std::string& key) const { return obj_.contains(key); }
  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  long integer(const std::string& key, long fallback);
  std::string text(const std::string& key, const std::string& fallback);
  bool flag(const std::string& key, bool fallback);
  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback);
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback);
  Section child(const std::string& key);

  /// Every value read so far, defaults included.
  const nlohmann::json& resolved() const { return resolved_; }
  void finish() const;

 private:
  const nlohmann::json& at(const std::string& key, nlohmann::json::value_t want, const char* kind);

  nlohmann::json obj_;
  std::string path_;
  std::set<std::string> used_;
  nlohmann::json resolved_ = nlohmann::json::object();
};

struct RunConfig {
  std::string experiment;
  nlohmann::json raw;       // whole file
  nlohmann::json params;    // the "params" object (may be empty)
  IntegratorConfig integrator;
  nlohmann::json integrator_json;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 0;
  std::uint64_t seed = 0;
};

RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a(const std::string& s);
std::string hex64(std::uint64_t v);

/// Tracks produced files; every CSV starts with one '#' line naming the tool
/// version, the config hash and the resolved config.
class OutputSet {
 public:
  OutputSet(std::filesystem::path dir, nlohmann::json resolved);

  /// Opens `name` with the header line already written.
  std::ofstream csv(const std::string& name);
  void json(const std::string& name, const nlohmann::json& body);
  void write_manifest();

  const std::string& hash() const { return hash_; }
  const nlohmann::json& resolved() const { return resolved_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json resolved_;
  std::string hash_;
  std::vector<std::string> files_;
};

}  // namespace fqk::cli
