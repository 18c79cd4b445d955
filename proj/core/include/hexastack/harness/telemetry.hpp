#pragma once

// Versioned CSV telemetry. Schema documented in docs/telemetry.md.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace hexastack::harness {

inline constexpr const char* kTelemetryFormat = "hexastack-telemetry v1";

const char* version();

enum class RowKind : std::uint8_t { kStep, kEvent };

struct TelemetryRow {
  double t = 0.0;
  RowKind kind = RowKind::kStep;
  std::string source;  // active command source, or "-" before arming
  std::string note;    // event text for marker rows
  std::array<double, 3> att_set{};   // roll, pitch, yaw deg (after prefilter)
  std::array<double, 3> att_meas{};  // estimator output seen by the controller
  std::array<double, 3> att_true{};
  std::array<double, 3> pid{};       // roll, pitch, yaw PID outputs
  std::array<double, 6> setpoint_rpm{};
  std::array<double, 6> motor_rpm{};
  std::array<double, 6> thrust{};    // N
  std::array<double, 3> position{};  // north, east m; altitude m (up)
  std::array<double, 3> velocity{};  // north, east, down m/s
  double lat = 0.0;                  // last GPS fix
  double lon = 0.0;
  double gps_alt = 0.0;
  double power_w = 0.0;              // battery draw over the last tick
  double energy_wh = 0.0;            // remaining
};

struct TelemetryMeta {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::string version;
  std::string scenario;
  std::string fidelity;
};

struct TelemetryLog {
  TelemetryMeta meta;
  std::vector<TelemetryRow> rows;
};

const std::vector<std::string>& telemetry_columns();

void write_telemetry(std::ostream& out, const TelemetryLog& log);
/// Throws ParseError on a malformed file or a header mismatch.
TelemetryLog read_telemetry(std::istream& in);

}  // namespace hexastack::harness
