#pragma once
#include <limits>
#include <vector>

#include "pcotdr/constants.hpp"

namespace pcotdr {

/// One uniform stretch of fiber. `attenuation_db_per_km` is the total one-way
/// loss (absorption + scattering); `alpha_s_per_km` is the scattering
/// coefficient and `capture_ratio` the fraction of Rayleigh-scattered light
/// recaptured into the backward guided mode.
struct FiberSegment {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.2;
  double alpha_s_per_km = 0.04;
  double capture_ratio = 0.0015;
};

/// Localized loss and/or reflection. `reflectance_db <= 0`; -inf means the
/// event does not reflect.
struct PointEvent {
  double position_km = 0.0;
  double loss_db = 0.0;
  double reflectance_db = -std::numeric_limits<double>::infinity();

  bool reflective() const { return std::isfinite(reflectance_db); }
};

struct FiberLink {
  std::vector<FiberSegment> segments;
  std::vector<PointEvent> events;
  double group_speed_km_s = k_default_group_speed_km_s;

  double length_km() const;
  double round_trip_delay_s() const { return 2.0 * length_km() / group_speed_km_s; }
  const FiberSegment& segment_at(double z_km) const;

  /// Throws validation_error naming the violated invariant.
  void validate() const;
};

struct LaserConfig {
  double peak_power_w = 0.4;   // effective peak power, internal losses removed
  double pulse_width_s = 1e-6;
  double pulse_rate_hz = 500.0;
  double wavelength_m = k_default_wavelength_m;

  double photon_energy_j() const { return pcotdr::photon_energy_j(wavelength_m); }
  void validate(const FiberLink& link) const;
};

/// Spatial extent of the pulse in fiber, Dl_p = c * Dt_pulse.
double pulse_extent_km(const FiberLink& link, const LaserConfig& laser);

/// One-way integrated attenuation from the launch end to z: segment
/// attenuation plus every event loss strictly before z. Throws out_of_range
/// for z outside [0, length].
double cumulative_loss_db(const FiberLink& link, double z_km);

/// Rayleigh backscatter power reaching the detector from position z,
///   P = S * P0 * alpha_s * Dl_p * 10^(-2 * loss(z) / 10)
/// with the linearized pulse factor; `exact` switches alpha_s*Dl_p for
/// (1 - exp(-alpha_s * Dl_p)).
double backscatter_power_w(const FiberLink& link, const LaserConfig& laser, double z_km,
                           bool exact = false);

/// Expected optical power on the detector at a given round-trip delay:
/// backscatter at z = c*delay/2 plus, for every reflective event within half
/// a pulse extent of z, P0 * 10^(refl/10) * 10^(-2*loss_to_event/10).
/// Reflections are rectangular, width Dl_p, centered on the event.
double incident_power_w(const FiberLink& link, const LaserConfig& laser, double delay_s);

}  // namespace pcotdr
