#pragma once
#include <cstdint>
#include <vector>

#include "pcotdr/detector.hpp"
#include "pcotdr/fiber.hpp"
#include "pcotdr/gating.hpp"
#include "pcotdr/trace.hpp"

namespace pcotdr {

struct AcquisitionOptions {
  double duration_s = 0.0;      // simulated wall time; basic mode splits it over positions
  double attenuation_db = 0.0;  // detector-side attenuator
  std::uint64_t seed = 1;
  int threads = 1;
  bool laser_off = false;          // dark run
  std::uint64_t timeline_salt = 0;  // distinguishes repeated runs (campaign partials)
};

/// Monte Carlo trace acquisition: drives the gate schedule against the
/// expected incident power, evolves the detector state (dead time, traps,
/// persistence) and bins detections by delay. Basic-mode positions are
/// independent detector timelines and may run on several threads; schemes
/// that share one timeline (train, free running, rapid) run sequentially.
/// Identical (inputs, seed) give bit-identical traces for any thread count.
Trace run_acquisition(const FiberLink& link, const LaserConfig& laser, const ApdModel& apd,
                      const GatingScheme& scheme, const AcquisitionOptions& opts);

/// Attenuation that puts the first measured bin at `target_rate` detections
/// per activated gate. Solved in closed form on the detection model, then
/// checked with a short Monte Carlo run (must agree within 5 percentage
/// points). Throws campaign_error when the target is unreachable.
double auto_attenuate(const FiberLink& link, const LaserConfig& laser, const ApdModel& apd,
                      const GatingScheme& scheme, double target_rate, std::uint64_t seed);

struct CampaignOptions {
  double dwell_per_bin_s = 180.0;
  double snr_floor = 4.0;   // rewind trigger: SNR below this in 3 consecutive bins
  double overlap_km = 5.0;  // delay rewind between partials
  double target_rate = 0.9;
  std::uint64_t seed = 1;
  int threads = 1;
};

/// Partial-trace measurement: acquire until the noise floor, rewind by the
/// overlap, remove attenuation to regain the target rate, repeat; stitch the
/// partials into one trace. Requires the basic scheme (delay-scanned
/// acquisition). When attenuation runs out before the far end, the result is
/// marked as partial coverage.
CampaignResult partial_trace_campaign(const FiberLink& link, const LaserConfig& laser,
                                      const ApdModel& apd, const GatingScheme& scheme,
                                      const CampaignOptions& opts);

/// Replaces the analytic dark expectation with a measured dark-run baseline:
/// each bin's expected dark count becomes the baseline's per-gate detection
/// frequency scaled to this trace's activated gates, and the power estimates
/// and dB values are recomputed.
void apply_dark_baseline(Trace& trace, const Trace& baseline, const ApdModel& apd);

/// Aligns each partial to the stitched prefix by the mean 5log-dB difference
/// over their overlap (>= 3 common finite bins) and rebases everything to a
/// fiber-referenced absolute power frame (partial 0 via its known
/// attenuation). Overlap bins keep the newer partial's values. Stitch-offset
/// uncertainty is folded into each bin's db_sigma.
Trace stitch_traces(const std::vector<PartialTrace>& partials);

struct LineFit {
  double slope_db_per_km = 0.0;
  double intercept_db = 0.0;
  long points = 0;
};

/// Least-squares line through (distance, db_value) over [z0, z1].
LineFit fit_trace_db(const Trace& trace, double z0_km, double z1_km);

struct DeadZoneResult {
  double length_km = 0.0;
  bool recovered = true;
  LineFit reference_fit;  // Rayleigh level fitted on the far window
};

/// Distance past the event until the trace stays within `threshold_db` of the
/// Rayleigh level fitted behind it. A bin counts as masked when it sits above
/// the threshold and either its neighbour does too or it exceeds twice the
/// threshold (single-bin noise guard).
DeadZoneResult measure_dead_zone(const Trace& trace, double event_position_km,
                                 double threshold_db = 0.5);

}  // namespace pcotdr
