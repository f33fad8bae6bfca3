#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace weakh::cli {

inline constexpr const char* kVersion = "0.1.0";
/// Default output directory when a command has no "out" key.
inline constexpr const char* kOutputDirEnv = "WEAKH_OUTPUT_DIR";

enum ExitCode : int { kOk = 0, kComputation = 1, kConfig = 2, kIo = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class KeyType { number, integer, boolean, string, object, array, number_or_array, any };

struct KeySpec {
  std::string name;
  KeyType type;
  nlohmann::json fallback;  // null: optional, absent unless given
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<KeySpec> keys;
};

const std::vector<CommandSpec>& commands();
const CommandSpec& command(const std::string& name);

/// Validated configuration: defaults, then the JSON document, then flag
/// overrides. Unknown keys and wrong types throw ConfigError.
struct RunConfig {
  std::string command;
  nlohmann::json values;
  unsigned threads = 1;

  const nlohmann::json& at(const std::string& key) const { return values.at(key); }
  bool has(const std::string& key) const { return values.contains(key) && !values.at(key).is_null(); }
};

/// `text` is the JSON document (may be empty); overrides are key -> raw flag
/// text, parsed as JSON when possible and as a string otherwise.
RunConfig make_config(const std::string& command, const std::string& text,
                      const std::vector<std::pair<std::string, std::string>>& overrides);

/// Hex digest of the configuration without run-only keys (threads, out).
std::string config_digest(const RunConfig& cfg);

struct CommandOutput {
  /// Main CSV, starting with the manifest comment.
  std::string csv;
  /// Extra files written next to the main output: (path, contents).
  std::vector<std::pair<std::string, std::string>> extra;
  /// Human-readable summary lines for stderr.
  std::vector<std::string> summary;
};

/// Runs one command. Throws ConfigError, ComputationError, IoError or
/// std::invalid_argument.
CommandOutput execute(const RunConfig& cfg);

/// Full front end: parses argv, runs, writes output. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace weakh::cli
