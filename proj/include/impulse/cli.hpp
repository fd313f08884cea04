#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace impulse {

/// Exit codes shared by every subcommand.
enum ExitCode : int { exit_ok = 0, exit_domain = 1, exit_usage = 2 };

struct CliOptions {
    std::string config;
    std::string out;                 // result directory
    std::optional<std::size_t> paths;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> horizon;
    double grid_scale = 1.0;
    bool quiet = false;
    std::string command_line;        // recorded in the log stanza
};

int cmd_validate(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_solve(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_simulate(const CliOptions& opt, std::ostream& out, std::ostream& err);
int cmd_diagnose(const CliOptions& opt, std::ostream& out, std::ostream& err);

/// Parses argv (subcommand first) and dispatches.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace impulse
