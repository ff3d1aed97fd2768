#pragma once

namespace qspiral::cli {

/// Parses the command line and runs one subcommand; returns the exit code.
int dispatch(int argc, char** argv);

}  // namespace qspiral::cli
