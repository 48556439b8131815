#pragma once
#include <string>
#include <vector>

namespace pcotdr {

/// Full command-line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv);

/// Convenience wrapper for in-process tests.
int run_cli(const std::vector<std::string>& args);

}  // namespace pcotdr
