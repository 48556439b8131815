#pragma once
#include <stdexcept>
#include <string>

namespace pcotdr {

/// Raised by the config reader on malformed text (position is 1-based).
struct config_parse_error : std::runtime_error {
  int line = 0;
  int column = 0;
  config_parse_error(const std::string& what, int line_, int column_)
      : std::runtime_error(what + " (line " + std::to_string(line_) + ", column " +
                           std::to_string(column_) + ")"),
        line(line_),
        column(column_) {}
};

/// Raised when a loaded configuration violates a model invariant.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by acquisition campaigns (unreachable target rate, no progress, ...).
struct campaign_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when every applied gate fired; no finite power estimate exists.
struct saturation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when partial traces cannot be aligned (insufficient overlap).
struct stitch_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised by `compare` when the two configs do not share a fiber.
struct comparison_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stable CLI exit codes, documented in the README.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,
  exit_config_parse = 3,
  exit_config_validation = 4,
  exit_campaign = 5,
  exit_saturation = 6,
  exit_comparison = 7,
  exit_partial_coverage = 8,
  exit_io = 9,
  exit_stitch = 10,
};

}  // namespace pcotdr
