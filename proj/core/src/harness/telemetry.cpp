#include "hexastack/harness/telemetry.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "hexastack/errors.hpp"

#ifndef HEXASTACK_VERSION
#define HEXASTACK_VERSION "0.0.0"
#endif

namespace hexastack::harness {
namespace {

void put(std::string& line, double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.9g", v);
  line += ',';
  line.append(buf, static_cast<std::size_t>(n));
}

template <std::size_t N>
void put(std::string& line, const std::array<double, N>& values) {
  for (double v : values) put(line, v);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double num(const std::string& s, int line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
    throw ParseError("telemetry:" + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace

const char* version() { return HEXASTACK_VERSION; }

const std::vector<std::string>& telemetry_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"t", "kind", "source", "note"};
    for (const char* group : {"set", "meas", "true"}) {
      for (const char* axis : {"roll", "pitch", "yaw"}) c.push_back(std::string(axis) + "_" + group);
    }
    for (const char* axis : {"roll", "pitch", "yaw"}) c.push_back(std::string("pid_") + axis);
    for (const char* group : {"sp", "rpm", "thrust"}) {
      for (int i = 1; i <= 6; ++i) c.push_back(std::string(group) + std::to_string(i));
    }
    for (const char* s : {"pos_n", "pos_e", "alt", "vel_n", "vel_e", "vel_d", "lat", "lon", "gps_alt",
                          "power_w", "energy_wh"}) {
      c.emplace_back(s);
    }
    return c;
  }();
  return cols;
}

void write_telemetry(std::ostream& out, const TelemetryLog& log) {
  out << "# " << kTelemetryFormat << " seed=" << log.meta.seed << " config_hash=";
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016" PRIx64, log.meta.config_hash);
  out << hash << " version=" << log.meta.version << " scenario=" << log.meta.scenario
      << " fidelity=" << log.meta.fidelity << "\n";
  const auto& cols = telemetry_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  std::string line;
  for (const auto& r : log.rows) {
    line.clear();
    char buf[32];
    line.append(buf, static_cast<std::size_t>(std::snprintf(buf, sizeof buf, "%.6f", r.t)));
    line += r.kind == RowKind::kEvent ? ",event," : ",step,";
    line += r.source;
    line += ',';
    line += r.note;
    put(line, r.att_set);
    put(line, r.att_meas);
    put(line, r.att_true);
    put(line, r.pid);
    put(line, r.setpoint_rpm);
    put(line, r.motor_rpm);
    put(line, r.thrust);
    put(line, r.position);
    put(line, r.velocity);
    put(line, r.lat);
    put(line, r.lon);
    put(line, r.gps_alt);
    put(line, r.power_w);
    put(line, r.energy_wh);
    line += '\n';
    out << line;
  }
}

TelemetryLog read_telemetry(std::istream& in) {
  TelemetryLog log;
  std::string line;
  int n = 1;
  if (!std::getline(in, line) || line.rfind(std::string("# ") + kTelemetryFormat, 0) != 0) {
    throw ParseError("telemetry:1: missing '# " + std::string(kTelemetryFormat) + "' line");
  }
  std::istringstream meta(line.substr(2 + std::string(kTelemetryFormat).size()));
  std::string kv;
  while (meta >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    if (key == "seed") log.meta.seed = std::stoull(value);
    if (key == "config_hash") log.meta.config_hash = std::stoull(value, nullptr, 16);
    if (key == "version") log.meta.version = value;
    if (key == "scenario") log.meta.scenario = value;
    if (key == "fidelity") log.meta.fidelity = value;
  }
  ++n;
  const auto& cols = telemetry_columns();
  if (!std::getline(in, line) || split(line) != cols) throw ParseError("telemetry:2: header does not match schema");
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != cols.size()) throw ParseError("telemetry:" + std::to_string(n) + ": wrong column count");
    TelemetryRow r;
    std::size_t k = 0;
    r.t = num(c[k++], n);
    const auto& kind = c[k++];
    if (kind != "step" && kind != "event") throw ParseError("telemetry:" + std::to_string(n) + ": bad kind");
    r.kind = kind == "event" ? RowKind::kEvent : RowKind::kStep;
    r.source = c[k++];
    r.note = c[k++];
    auto fill = [&](auto& a) {
      for (auto& v : a) v = num(c[k++], n);
    };
    fill(r.att_set);
    fill(r.att_meas);
    fill(r.att_true);
    fill(r.pid);
    fill(r.setpoint_rpm);
    fill(r.motor_rpm);
    fill(r.thrust);
    fill(r.position);
    fill(r.velocity);
    r.lat = num(c[k++], n);
    r.lon = num(c[k++], n);
    r.gps_alt = num(c[k++], n);
    r.power_w = num(c[k++], n);
    r.energy_wh = num(c[k++], n);
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace hexastack::harness
