#pragma once

#include <filesystem>
#include <string>

#include "ykrl/config.hpp"

namespace ykrl {

struct CliOptions {
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 0;
    bool plots = false;
    bool quick = false;  // smoke-scale overrides
    int threads = 0;
};

// Subcommand bodies. Each returns a process exit code: 0 on success, 1 on a
// runtime failure (reported in the outputs), with config errors raised as
// ConfigError before any work starts.
int cmd_sim_check(const IniConfig& cfg, const CliOptions& opt);
int cmd_rand_hankel(const IniConfig& cfg, const CliOptions& opt);
int cmd_train_tank(const IniConfig& cfg, const CliOptions& opt);
int cmd_pi_tune(const IniConfig& cfg, const CliOptions& opt);

// Full argv dispatch (used by the ykrl binary): parses global flags, loads
// the config, validates it, and runs the subcommand. Exit code 2 marks
// invalid configuration or usage.
int run_cli(int argc, const char* const* argv);

}  // namespace ykrl
