#include "pcotdr/fiber.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pcotdr/errors.hpp"

namespace pcotdr {

double FiberLink::length_km() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.length_km;
  return total;
}

const FiberSegment& FiberLink::segment_at(double z_km) const {
  double start = 0.0;
  for (const auto& s : segments) {
    if (z_km < start + s.length_km) return s;
    start += s.length_km;
  }
  return segments.back();  // z at (or just past) the far end
}

void FiberLink::validate() const {
  if (segments.empty()) throw validation_error("fiber.segments: at least one segment required");
  for (const auto& s : segments) {
    if (!(s.length_km > 0)) throw validation_error("fiber.segments: length_km must be > 0");
    if (!(s.attenuation_db_per_km >= 0))
      throw validation_error("fiber.segments: atten_db_per_km must be >= 0");
    if (!(s.alpha_s_per_km > 0))
      throw validation_error("fiber.segments: alpha_s_per_km must be > 0");
    if (!(s.capture_ratio > 0 && s.capture_ratio < 1))
      throw validation_error("fiber.segments: capture_ratio must be in (0, 1)");
  }
  if (!(group_speed_km_s > 0)) throw validation_error("fiber.group_speed_km_s must be > 0");
  const double total = length_km();
  for (const auto& e : events) {
    if (e.position_km < 0 || e.position_km > total)
      throw validation_error("fiber.events: position_km outside link length");
    if (e.loss_db < 0) throw validation_error("fiber.events: loss_db must be >= 0");
    if (e.reflective() && e.reflectance_db > 0)
      throw validation_error("fiber.events: reflectance_db must be <= 0");
    if (e.loss_db == 0 && !e.reflective())
      throw validation_error("fiber.events: loss and reflectance cannot both be absent");
  }
}

void LaserConfig::validate(const FiberLink& link) const {
  if (!(peak_power_w > 0)) throw validation_error("laser.peak_power_w must be > 0");
  if (!(pulse_width_s > 0)) throw validation_error("laser.pulse_width_s must be > 0");
  if (!(wavelength_m > 0)) throw validation_error("laser.wavelength_m must be > 0");
  if (!(pulse_rate_hz > 0)) throw validation_error("laser.pulse_rate_hz must be > 0");
  const double f_max = link.group_speed_km_s / (2.0 * link.length_km());
  if (pulse_rate_hz > f_max * (1.0 + 1e-9))
    throw validation_error("laser.pulse_rate_hz must not exceed c/(2*L_fiber) = " +
                           std::to_string(f_max) + " Hz");
}

double pulse_extent_km(const FiberLink& link, const LaserConfig& laser) {
  return link.group_speed_km_s * laser.pulse_width_s;
}

double cumulative_loss_db(const FiberLink& link, double z_km) {
  if (z_km < 0 || z_km > link.length_km() * (1.0 + 1e-12))
    throw std::out_of_range("cumulative_loss_db: z outside link");
  double loss = 0.0;
  double start = 0.0;
  for (const auto& s : link.segments) {
    const double within = std::min(std::max(z_km - start, 0.0), s.length_km);
    loss += within * s.attenuation_db_per_km;
    start += s.length_km;
  }
  for (const auto& e : link.events) {
    if (e.position_km < z_km) loss += e.loss_db;
  }
  return loss;
}

double backscatter_power_w(const FiberLink& link, const LaserConfig& laser, double z_km,
                           bool exact) {
  const double loss_db = cumulative_loss_db(link, z_km);  // range-checks z
  const FiberSegment& seg = link.segment_at(z_km);
  const double dl_p = pulse_extent_km(link, laser);
  const double pulse_factor =
      exact ? -std::expm1(-seg.alpha_s_per_km * dl_p) : seg.alpha_s_per_km * dl_p;
  return seg.capture_ratio * laser.peak_power_w * pulse_factor *
         std::pow(10.0, -2.0 * loss_db / 10.0);
}

double incident_power_w(const FiberLink& link, const LaserConfig& laser, double delay_s) {
  if (delay_s < 0) throw std::out_of_range("incident_power_w: negative delay");
  const double z = link.group_speed_km_s * delay_s / 2.0;
  const double length = link.length_km();
  double power = 0.0;
  if (z <= length) power += backscatter_power_w(link, laser, z);
  const double half_window = pulse_extent_km(link, laser) / 2.0;
  for (const auto& e : link.events) {
    if (!e.reflective()) continue;
    if (std::abs(z - e.position_km) > half_window) continue;
    const double loss_to_event = cumulative_loss_db(link, e.position_km);
    power += laser.peak_power_w * std::pow(10.0, e.reflectance_db / 10.0) *
             std::pow(10.0, -2.0 * loss_to_event / 10.0);
  }
  return power;
}

}  // namespace pcotdr
