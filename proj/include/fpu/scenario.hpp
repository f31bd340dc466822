#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace fpu {

enum class ScenarioKind {
  OrbitalStability,
  LinearizedFPUDecay,
  LinearizedKdVDecay,
  BacklundAudit,
  SolitonResolution,
  DispersionAudit
};
ScenarioKind parse_kind(const std::string& name);
std::string kind_name(ScenarioKind k);

// key.path = value text config. Lines starting with '#' are comments; lists are
// comma-separated. Keys and values are checked against config_schema().
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  // Replaces the value (validated against the schema).
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  // Explicit value or the schema default.
  std::string raw(const std::string& key) const;
  double number(const std::string& key) const;
  long integer(const std::string& key) const;
  std::vector<double> numbers(const std::string& key) const;
  std::string text(const std::string& key) const { return raw(key); }

  ScenarioKind kind() const;
  // Every schema key with its effective value.
  nlohmann::json resolved() const;
  // Canonical text form (explicit keys only, sorted).
  std::string str() const;

 private:
  std::map<std::string, std::string> values_;
};

// JSON Schema mirror of the config keys (types, defaults, enums).
const nlohmann::json& config_schema();

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "<", ">", "=="
  double limit = 0.0;
  bool pass = false;
};

struct ScenarioOutcome {
  ScenarioKind kind{};
  bool pass = false;
  std::vector<Check> checks;
  nlohmann::json summary;
  std::filesystem::path dir;
};

// Runs the scenario and writes summary.json, CSV series, SVG plots and manifest.json
// (SHA-256 of every artifact) into out_dir. Errors propagate with the scenario kind in
// the message; artifacts written before the error are kept.
ScenarioOutcome run_scenario(const Config& cfg, const std::filesystem::path& out_dir);

struct SweepEntry {
  std::string value;
  std::filesystem::path dir;
  bool ok = false;    // finished without error
  bool pass = false;  // all checks passed
  std::string error;
  std::map<std::string, double> fitted;
};

struct SweepOutcome {
  std::string axis;
  std::vector<SweepEntry> entries;
  bool pass() const;
  bool errors() const;
};

// Thread count from FPULAB_THREADS, else the hardware concurrency.
unsigned sweep_threads();

// One run per value in out_dir/<index>; sweep.csv, sweep.svg, sweep.json and a manifest
// aggregate the fitted constants against the swept value.
SweepOutcome sweep(const Config& base, const std::string& axis, const std::vector<std::string>& values,
                   const std::filesystem::path& out_dir, unsigned threads = 0);

std::string sha256_file(const std::filesystem::path& path);

struct Digest {
  std::string text;
  bool pass = false;
};
// Verifies manifest digests and renders the summary (or the sweep aggregate) as a table.
// Throws IoError for missing or unreadable files and IntegrityError on digest mismatch.
Digest report(const std::filesystem::path& dir);

}  // namespace fpu
