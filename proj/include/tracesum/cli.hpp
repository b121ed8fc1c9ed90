#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tracesum/config.hpp"
#include "tracesum/errors.hpp"

namespace tracesum
{

// Exit statuses of the command-line tool.
enum ExitStatus
{
  kExitPass = 0,
  kExitUsage = 1,
  kExitNumeric = 2,
};

const std::vector<std::string> &cli_commands();

// Runs one command on a validated config, writing the artifact to `out`.
// Returns the exit status; numeric failures that are not exceptions (an
// oracle comparison outside tolerance, say) return kExitNumeric.
int run_command(const std::string &command, const ProblemConfig &config, std::ostream &out, std::ostream &err);

// Full entry point: argument parsing, config loading, error reporting.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

// Exit status for a library error code.
int exit_status(ErrorCode code);

}  // namespace tracesum
