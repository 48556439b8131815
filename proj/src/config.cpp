#include "pcotdr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "pcotdr/errors.hpp"

namespace pcotdr {
namespace {

struct RawEntry {
  std::string value;
  int line = 0;
  int column = 0;
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "fiber.segments", "fiber.events", "fiber.group_speed_km_s",
      "laser.peak_power_w", "laser.pulse_width_s", "laser.pulse_rate_hz", "laser.wavelength_m",
      "apd.efficiency", "apd.dark_rate_hz", "apd.dead_time_s",
      "apd.afterpulse.a0", "apd.afterpulse.tau_trap_s",
      "apd.persistence.kappa", "apd.persistence.gamma_hz",
      "scheme.type", "scheme.gate_width_s", "scheme.dead_time_override_s",
      "scheme.delay_step_s", "scheme.gates_per_point", "scheme.f_gate_hz",
      "scheme.start_delay_shifts",
      "campaign.mode", "campaign.dwell_s", "campaign.snr_floor", "campaign.overlap_km",
      "campaign.target_rate", "campaign.seed",
      "output.path", "output.format",
  };
  return keys;
}

const std::set<std::string>& known_sections() {
  static const std::set<std::string> sections = {
      "fiber", "laser", "apd", "apd.afterpulse", "apd.persistence",
      "scheme", "campaign", "output"};
  return sections;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, int line, int col) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size())
      throw config_parse_error("trailing characters after number '" + v + "'", line, col);
    return x;
  } catch (const config_parse_error&) {
    throw;
  } catch (const std::exception&) {
    throw config_parse_error("expected a number, got '" + v + "'", line, col);
  }
}

long parse_long(const std::string& v, int line, int col) {
  const double x = parse_double(v, line, col);
  if (x != std::floor(x))
    throw config_parse_error("expected an integer, got '" + v + "'", line, col);
  return static_cast<long>(x);
}

std::uint64_t parse_u64(const std::string& v, int line, int col) {
  const long x = parse_long(v, line, col);
  if (x < 0) throw config_parse_error("expected a non-negative integer", line, col);
  return static_cast<std::uint64_t>(x);
}

/// Parses "(a, b, c); (d, e, f)" into tuples; "none" maps to NaN.
std::vector<std::vector<double>> parse_tuples(const std::string& v, int line, int col) {
  std::vector<std::vector<double>> tuples;
  std::size_t i = 0;
  auto skip_ws = [&]() {
    while (i < v.size() && (v[i] == ' ' || v[i] == '\t')) ++i;
  };
  while (true) {
    skip_ws();
    if (i >= v.size()) break;
    if (v[i] != '(')
      throw config_parse_error("expected '(' in tuple list", line, col + static_cast<int>(i));
    ++i;
    std::vector<double> tuple;
    std::string field;
    for (; i < v.size() && v[i] != ')'; ++i) {
      if (v[i] == ',') {
        tuple.push_back(NAN);
        const std::string f = trim(field);
        if (f.empty())
          throw config_parse_error("empty tuple field", line, col + static_cast<int>(i));
        tuple.back() = f == "none" ? NAN : parse_double(f, line, col + static_cast<int>(i));
        field.clear();
      } else {
        field.push_back(v[i]);
      }
    }
    if (i >= v.size())
      throw config_parse_error("unterminated tuple", line, col + static_cast<int>(i));
    const std::string f = trim(field);
    if (f.empty()) throw config_parse_error("empty tuple field", line, col);
    tuple.push_back(f == "none" ? NAN : parse_double(f, line, col));
    tuples.push_back(std::move(tuple));
    ++i;  // ')'
    skip_ws();
    if (i < v.size()) {
      if (v[i] != ';')
        throw config_parse_error("expected ';' between tuples", line, col + static_cast<int>(i));
      ++i;
    }
  }
  return tuples;
}

}  // namespace

SimConfig parse_config(const std::string& text, const std::string& name) {
  std::map<std::string, RawEntry> entries;
  {
    std::istringstream is(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(is, raw)) {
      ++line_no;
      std::string line = raw;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw config_parse_error("unterminated section header", line_no, 1);
        section = trim(line.substr(1, line.size() - 2));
        if (!known_sections().count(section))
          throw validation_error("unknown section [" + section + "] at line " +
                                 std::to_string(line_no));
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw config_parse_error("expected 'key = value'", line_no, 1);
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) throw config_parse_error("empty key", line_no, 1);
      if (section.empty())
        throw config_parse_error("key '" + key + "' outside any [section]", line_no, 1);
      const std::string full = section + "." + key;
      if (!known_keys().count(full))
        throw validation_error("unknown key '" + full + "' at line " + std::to_string(line_no));
      const int col = static_cast<int>(raw.find(key)) + 1;
      if (entries.count(full))
        throw config_parse_error("duplicate key '" + full + "'", line_no, col);
      if (value.empty()) throw config_parse_error("empty value for '" + full + "'", line_no, col);
      entries[full] = RawEntry{value, line_no, col};
    }
  }
  (void)name;

  SimConfig cfg;
  auto has = [&](const char* k) { return entries.count(k) != 0; };
  auto get = [&](const char* k) -> const RawEntry& { return entries.at(k); };
  auto get_d = [&](const char* k) {
    const RawEntry& e = get(k);
    return parse_double(e.value, e.line, e.column);
  };
  auto get_l = [&](const char* k) {
    const RawEntry& e = get(k);
    return parse_long(e.value, e.line, e.column);
  };

  // fiber
  if (!has("fiber.segments"))
    throw validation_error("fiber.segments is required");
  {
    const RawEntry& e = get("fiber.segments");
    bool defaults_used = false;
    for (const auto& t : parse_tuples(e.value, e.line, e.column)) {
      if (t.size() != 2 && t.size() != 4)
        throw config_parse_error(
            "fiber.segments tuples are (length_km, atten_db_per_km[, alpha_s_per_km, capture_ratio])",
            e.line, e.column);
      FiberSegment s;
      s.length_km = t[0];
      s.attenuation_db_per_km = t[1];
      if (t.size() == 4) {
        s.alpha_s_per_km = t[2];
        s.capture_ratio = t[3];
      } else {
        defaults_used = true;
      }
      if (std::isnan(s.length_km) || std::isnan(s.attenuation_db_per_km))
        throw config_parse_error("fiber.segments: 'none' is not valid here", e.line, e.column);
      cfg.fiber.segments.push_back(s);
    }
    if (defaults_used)
      cfg.assumptions.push_back(
          "fiber: alpha_s=0.04 /km and capture_ratio=0.0015 assumed (typical 1550 nm values, "
          "not device measurements)");
  }
  if (has("fiber.events")) {
    const RawEntry& e = get("fiber.events");
    for (const auto& t : parse_tuples(e.value, e.line, e.column)) {
      if (t.size() != 3)
        throw config_parse_error("fiber.events tuples are (position_km, loss_db, reflectance_db)",
                                 e.line, e.column);
      PointEvent ev;
      ev.position_km = t[0];
      if (std::isnan(ev.position_km))
        throw config_parse_error("fiber.events: position cannot be 'none'", e.line, e.column);
      ev.loss_db = std::isnan(t[1]) ? 0.0 : t[1];
      ev.reflectance_db = std::isnan(t[2]) ? -std::numeric_limits<double>::infinity() : t[2];
      cfg.fiber.events.push_back(ev);
    }
  }
  if (has("fiber.group_speed_km_s")) cfg.fiber.group_speed_km_s = get_d("fiber.group_speed_km_s");
  cfg.fiber.validate();

  // laser
  if (has("laser.peak_power_w")) cfg.laser.peak_power_w = get_d("laser.peak_power_w");
  if (has("laser.pulse_width_s")) cfg.laser.pulse_width_s = get_d("laser.pulse_width_s");
  if (has("laser.wavelength_m")) cfg.laser.wavelength_m = get_d("laser.wavelength_m");
  if (has("laser.pulse_rate_hz"))
    cfg.laser.pulse_rate_hz = get_d("laser.pulse_rate_hz");
  else
    cfg.laser.pulse_rate_hz = cfg.fiber.group_speed_km_s / (2.0 * cfg.fiber.length_km());
  cfg.laser.validate(cfg.fiber);

  // apd
  if (has("apd.efficiency")) cfg.apd.efficiency = get_d("apd.efficiency");
  if (has("apd.dark_rate_hz")) cfg.apd.dark_rate_hz = get_d("apd.dark_rate_hz");
  if (has("apd.dead_time_s")) cfg.apd.dead_time_s = get_d("apd.dead_time_s");
  if (has("apd.afterpulse.a0"))
    cfg.apd.afterpulse.a0 = get_d("apd.afterpulse.a0");
  else
    cfg.assumptions.push_back("apd.afterpulse.a0 = 0.1 (calibration default, not a device value)");
  if (has("apd.afterpulse.tau_trap_s"))
    cfg.apd.afterpulse.tau_trap_s = get_d("apd.afterpulse.tau_trap_s");
  else
    cfg.assumptions.push_back(
        "apd.afterpulse.tau_trap_s = 2e-6 (calibration default, not a device value)");
  if (has("apd.persistence.kappa"))
    cfg.apd.persistence.kappa = get_d("apd.persistence.kappa");
  else
    cfg.assumptions.push_back("apd.persistence.kappa defaulted (calibrated to the dead-zone scenario)");
  if (has("apd.persistence.gamma_hz"))
    cfg.apd.persistence.gamma_hz = get_d("apd.persistence.gamma_hz");
  else
    cfg.assumptions.push_back(
        "apd.persistence.gamma_hz defaulted (calibrated to the dead-zone scenario)");
  cfg.apd.photon_energy_j = photon_energy_j(cfg.laser.wavelength_m);
  cfg.apd.validate();

  // scheme
  if (has("scheme.type")) cfg.scheme.kind = scheme_kind_from_string(get("scheme.type").value);
  if (cfg.scheme.kind == SchemeKind::rapid_gating) {
    const GatingScheme rapid = default_rapid_gating();
    cfg.scheme.gate_width_s = rapid.gate_width_s;
    cfg.scheme.f_gate_hz = rapid.f_gate_hz;
    cfg.scheme.dead_time_override_s = rapid.dead_time_override_s;
  } else {
    cfg.scheme.gate_width_s = cfg.laser.pulse_width_s;  // Dt_gate adapted to the pulse
  }
  if (has("scheme.gate_width_s")) cfg.scheme.gate_width_s = get_d("scheme.gate_width_s");
  if (has("scheme.dead_time_override_s"))
    cfg.scheme.dead_time_override_s = get_d("scheme.dead_time_override_s");
  if (has("scheme.delay_step_s")) cfg.scheme.delay_step_s = get_d("scheme.delay_step_s");
  if (has("scheme.gates_per_point")) cfg.scheme.gates_per_point = get_l("scheme.gates_per_point");
  if (has("scheme.f_gate_hz")) cfg.scheme.f_gate_hz = get_d("scheme.f_gate_hz");
  if (has("scheme.start_delay_shifts"))
    cfg.scheme.start_delay_shifts = static_cast<int>(get_l("scheme.start_delay_shifts"));
  cfg.scheme.validate();

  // campaign
  if (has("campaign.mode")) {
    cfg.campaign.mode = get("campaign.mode").value;
    if (cfg.campaign.mode != "auto" && cfg.campaign.mode != "campaign" &&
        cfg.campaign.mode != "single")
      throw validation_error("campaign.mode must be auto, campaign or single");
  }
  if (has("campaign.dwell_s")) cfg.campaign.dwell_s = get_d("campaign.dwell_s");
  if (has("campaign.snr_floor")) cfg.campaign.snr_floor = get_d("campaign.snr_floor");
  if (has("campaign.overlap_km")) cfg.campaign.overlap_km = get_d("campaign.overlap_km");
  if (has("campaign.target_rate")) cfg.campaign.target_rate = get_d("campaign.target_rate");
  if (has("campaign.seed")) {
    const RawEntry& e = get("campaign.seed");
    cfg.campaign.seed = parse_u64(e.value, e.line, e.column);
  }
  if (!(cfg.campaign.dwell_s > 0)) throw validation_error("campaign.dwell_s must be > 0");
  if (!(cfg.campaign.snr_floor > 0)) throw validation_error("campaign.snr_floor must be > 0");
  if (!(cfg.campaign.overlap_km > 0)) throw validation_error("campaign.overlap_km must be > 0");
  if (!(cfg.campaign.target_rate > 0 && cfg.campaign.target_rate < 1))
    throw validation_error("campaign.target_rate must be in (0, 1)");
  if (cfg.campaign.mode == "campaign" && cfg.scheme.kind != SchemeKind::basic)
    throw validation_error("campaign.mode=campaign requires scheme.type=basic");

  // output
  if (has("output.path")) cfg.output.path = get("output.path").value;
  if (has("output.format")) {
    cfg.output.format = get("output.format").value;
    if (cfg.output.format != "csv") throw validation_error("output.format: only 'csv' is supported");
  }

  cfg.assumptions.push_back("fiber.capture_ratio values are assumptions; the absolute "
                            "dynamic-range scale depends on them");
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str(), path);
}

std::string echo_config(const SimConfig& cfg) {
  std::ostringstream os;
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return std::string(buf);
  };
  os << "[fiber]\n";
  os << "group_speed_km_s = " << num(cfg.fiber.group_speed_km_s) << "\n";
  os << "segments = ";
  for (std::size_t i = 0; i < cfg.fiber.segments.size(); ++i) {
    const auto& s = cfg.fiber.segments[i];
    os << (i ? "; " : "") << "(" << num(s.length_km) << ", " << num(s.attenuation_db_per_km)
       << ", " << num(s.alpha_s_per_km) << ", " << num(s.capture_ratio) << ")";
  }
  os << "\n";
  if (!cfg.fiber.events.empty()) {
    os << "events = ";
    for (std::size_t i = 0; i < cfg.fiber.events.size(); ++i) {
      const auto& e = cfg.fiber.events[i];
      os << (i ? "; " : "") << "(" << num(e.position_km) << ", " << num(e.loss_db) << ", ";
      if (e.reflective())
        os << num(e.reflectance_db);
      else
        os << "none";
      os << ")";
    }
    os << "\n";
  }
  os << "[laser]\n";
  os << "peak_power_w = " << num(cfg.laser.peak_power_w) << "\n";
  os << "pulse_width_s = " << num(cfg.laser.pulse_width_s) << "\n";
  os << "pulse_rate_hz = " << num(cfg.laser.pulse_rate_hz) << "\n";
  os << "wavelength_m = " << num(cfg.laser.wavelength_m) << "\n";
  os << "[apd]\n";
  os << "efficiency = " << num(cfg.apd.efficiency) << "\n";
  os << "dark_rate_hz = " << num(cfg.apd.dark_rate_hz) << "\n";
  os << "dead_time_s = " << num(cfg.apd.dead_time_s) << "\n";
  os << "[apd.afterpulse]\n";
  os << "a0 = " << num(cfg.apd.afterpulse.a0) << "\n";
  os << "tau_trap_s = " << num(cfg.apd.afterpulse.tau_trap_s) << "\n";
  os << "[apd.persistence]\n";
  os << "kappa = " << num(cfg.apd.persistence.kappa) << "\n";
  os << "gamma_hz = " << num(cfg.apd.persistence.gamma_hz) << "\n";
  os << "[scheme]\n";
  os << "type = " << to_string(cfg.scheme.kind) << "\n";
  os << "gate_width_s = " << num(cfg.scheme.gate_width_s) << "\n";
  if (cfg.scheme.dead_time_override_s >= 0)
    os << "dead_time_override_s = " << num(cfg.scheme.dead_time_override_s) << "\n";
  if (cfg.scheme.kind == SchemeKind::basic) {
    os << "delay_step_s = " << num(cfg.scheme.delay_step_s) << "\n";
    os << "gates_per_point = " << cfg.scheme.gates_per_point << "\n";
  }
  if (cfg.scheme.kind == SchemeKind::train_of_gates ||
      cfg.scheme.kind == SchemeKind::rapid_gating) {
    os << "f_gate_hz = " << num(cfg.scheme.f_gate_hz) << "\n";
    os << "start_delay_shifts = " << cfg.scheme.start_delay_shifts << "\n";
  }
  os << "[campaign]\n";
  os << "mode = " << cfg.campaign.mode << "\n";
  os << "dwell_s = " << num(cfg.campaign.dwell_s) << "\n";
  os << "snr_floor = " << num(cfg.campaign.snr_floor) << "\n";
  os << "overlap_km = " << num(cfg.campaign.overlap_km) << "\n";
  os << "target_rate = " << num(cfg.campaign.target_rate) << "\n";
  os << "seed = " << cfg.campaign.seed << "\n";
  os << "[output]\n";
  os << "path = " << cfg.output.path << "\n";
  os << "format = " << cfg.output.format << "\n";
  return os.str();
}

}  // namespace pcotdr
