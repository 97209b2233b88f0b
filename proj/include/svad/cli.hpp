// cli.hpp — subcommand dispatch for the svad tool. Exit statuses: 0 on
// success, 2 on usage/config errors, 1 on runtime failures; every failure
// prints a one-line diagnostic to stderr.
#pragma once

namespace svad {

int run_command(int argc, const char* const* argv);

}  // namespace svad
