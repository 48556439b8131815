#pragma once
#include <string>

#include "pcotdr/config.hpp"
#include "pcotdr/trace.hpp"

namespace pcotdr {

/// Human-readable run report: echoed inputs, derived quantities (duty cycle,
/// NEPs, predicted dynamic range, scheme recommendation) and the list of
/// flagged assumptions. Deterministic: no timestamps or host state.
std::string build_report(const SimConfig& cfg, const CampaignResult* campaign,
                         const Trace* single_run);

}  // namespace pcotdr
