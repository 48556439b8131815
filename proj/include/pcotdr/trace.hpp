#pragma once
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pcotdr {

struct TraceBin {
  double delay_s = 0.0;
  double distance_km = 0.0;
  long gates_applied = 0;
  long gates_activated = 0;
  long detections = 0;
  double attenuation_db = 0.0;
  double est_power_w = 0.0;  // NaN when the bin holds no estimate
  double est_low_w = 0.0;
  double est_high_w = 0.0;
  double db_value = 0.0;   // 5 log10, referenced to the trace's first valid bin
  double db_sigma = 0.0;   // 1 sigma of db_value (counting + stitch alignment)
  int partial_index = 0;
  bool no_data = false;
  bool saturated = false;

  std::string provenance() const;
};

struct Trace {
  std::vector<TraceBin> bins;
  double gate_width_s = 0.0;
  double bin_pitch_s = 0.0;
  double simulated_wall_time_s = 0.0;
  std::uint64_t seed = 0;

  /// Bin signal-to-noise ratio, (N_det - N_dc_expected)/sqrt(N_det).
  static double bin_snr(const TraceBin& bin, double dark_rate_hz, double gate_width_s);
};

struct PartialTrace {
  Trace trace;
  double attenuation_db = 0.0;
  double overlap_km = 0.0;      // rewound distance shared with the previous partial
  double usable_span_db = 0.0;  // first bin to last above-floor bin
  long first_bin_index = 0;     // on the campaign-wide delay grid
};

struct CampaignResult {
  Trace stitched;
  std::vector<PartialTrace> partials;
  double wall_time_simulated_s = 0.0;
  std::uint64_t seed = 0;
  bool full_coverage = true;  // false when the tail stayed unmeasured
};

/// Trace CSV, one row per bin. Column set is fixed:
/// distance_km,delay_s,gates_applied,gates_activated,detections,
/// attenuation_db,est_power_w,trace_db,provenance
/// Floats carry 10 significant digits.
void write_trace_csv(std::ostream& os, const Trace& trace);
void write_trace_csv(const std::string& path, const Trace& trace);
Trace read_trace_csv(std::istream& is, const std::string& name = "<stream>");
Trace read_trace_csv(const std::string& path);

}  // namespace pcotdr
