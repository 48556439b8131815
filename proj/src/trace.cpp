#include "pcotdr/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pcotdr/errors.hpp"

namespace pcotdr {
namespace {

constexpr const char* k_header =
    "distance_km,delay_s,gates_applied,gates_activated,detections,"
    "attenuation_db,est_power_w,trace_db,provenance";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9e", v);
  return buf;
}

}  // namespace

std::string TraceBin::provenance() const {
  std::string p = "p" + std::to_string(partial_index);
  if (saturated) p += "!saturated";
  if (no_data) p += "!nodata";
  return p;
}

double Trace::bin_snr(const TraceBin& bin, double dark_rate_hz, double gate_width_s) {
  if (bin.detections <= 0) return 0.0;
  const double n_dc = dark_rate_hz * gate_width_s * static_cast<double>(bin.gates_activated);
  const double sig = static_cast<double>(bin.detections) - n_dc;
  if (sig <= 0) return 0.0;
  return sig / std::sqrt(static_cast<double>(bin.detections));
}

void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << k_header << '\n';
  for (const auto& b : trace.bins) {
    os << fmt(b.distance_km) << ',' << fmt(b.delay_s) << ',' << b.gates_applied << ','
       << b.gates_activated << ',' << b.detections << ',' << fmt(b.attenuation_db) << ','
       << fmt(b.est_power_w) << ',' << fmt(b.db_value) << ',' << b.provenance() << '\n';
  }
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_trace_csv(os, trace);
}

Trace read_trace_csv(std::istream& is, const std::string& name) {
  Trace trace;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(name + ": empty trace file");
  if (line != k_header)
    throw std::runtime_error(name + ": unexpected CSV header '" + line + "'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field;
    TraceBin b;
    auto next = [&]() {
      if (!std::getline(row, field, ','))
        throw std::runtime_error(name + ": truncated CSV row '" + line + "'");
      return field;
    };
    b.distance_km = std::stod(next());
    b.delay_s = std::stod(next());
    b.gates_applied = std::stol(next());
    b.gates_activated = std::stol(next());
    b.detections = std::stol(next());
    b.attenuation_db = std::stod(next());
    b.est_power_w = std::stod(next());
    b.db_value = std::stod(next());
    const std::string prov = next();
    if (prov.size() < 2 || prov[0] != 'p')
      throw std::runtime_error(name + ": bad provenance '" + prov + "'");
    b.partial_index = std::stoi(prov.substr(1));
    b.no_data = prov.find("!nodata") != std::string::npos;
    b.saturated = prov.find("!saturated") != std::string::npos;
    trace.bins.push_back(b);
  }
  if (trace.bins.size() >= 2)
    trace.bin_pitch_s = trace.bins[1].delay_s - trace.bins[0].delay_s;
  return trace;
}

Trace read_trace_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  return read_trace_csv(is, path);
}

}  // namespace pcotdr
