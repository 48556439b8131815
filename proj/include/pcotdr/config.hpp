#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "pcotdr/detector.hpp"
#include "pcotdr/fiber.hpp"
#include "pcotdr/gating.hpp"

namespace pcotdr {

struct CampaignConfig {
  std::string mode = "auto";  // auto | campaign | single
  double dwell_s = 180.0;
  double snr_floor = 4.0;
  double overlap_km = 5.0;
  double target_rate = 0.9;
  std::uint64_t seed = 1;
};

struct OutputConfig {
  std::string path = "trace.csv";
  std::string format = "csv";
};

struct SimConfig {
  FiberLink fiber;
  LaserConfig laser;
  ApdModel apd;
  GatingScheme scheme;
  CampaignConfig campaign;
  OutputConfig output;
  std::vector<std::string> assumptions;  // flagged non-measured defaults

  /// Resolves campaign.mode "auto": campaigns need the delay-scanned scheme.
  bool campaign_mode() const {
    if (campaign.mode == "campaign") return true;
    if (campaign.mode == "single") return false;
    return scheme.kind == SchemeKind::basic;
  }
};

/// Parses the flat sections + typed-keys grammar documented in the README.
/// Unknown sections/keys and duplicate keys are rejected; config_parse_error
/// carries line/column, validation_error names the violated invariant.
SimConfig parse_config(const std::string& text, const std::string& name);
SimConfig load_config(const std::string& path);

/// Canonical text of the fully materialized configuration.
std::string echo_config(const SimConfig& cfg);

}  // namespace pcotdr
