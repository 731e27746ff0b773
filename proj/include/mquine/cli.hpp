#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mquine/training.hpp"

namespace mquine {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad config key or value; maps to the usage exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keys accepted in config files and as --key flags: the Hyperparams fields
/// followed by the TrainConfig extras.
const std::vector<std::string>& config_keys();

/// Flat "key = value" text; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> parse_config(std::istream& in, const std::string& origin);
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Sets one field of `config` from its text form.
void apply_setting(TrainConfig& config, const std::string& key, const std::string& value);

/// Entry point behind the mquine binary. Subcommands: train, eval, zstats,
/// verify, selftest. Returns 0 on success, 1 on runtime or data errors and
/// 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mquine
