#pragma once

// Scripted mission: metadata plus a timeline of (t, event) lines.
//
//   [scenario]
//   name = hover
//   fidelity = averaged
//   payload_kg = 0
//   duration = 60
//   seed = 1
//
//   [timeline]
//   0.5 = ARM
//   1.0 = TAKEOFF 2.0

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hexastack/airframe/rigid_body.hpp"
#include "hexastack/bldc/motor.hpp"
#include "hexastack/harness/sectioned_text.hpp"

namespace hexastack::harness {

enum class EventKind : std::uint8_t {
  kArm,
  kTakeoff,      // altitude m
  kHover,        // dt s (holds; marker only)
  kSetAttitude,  // roll, pitch, yaw deg
  kForward,      // speed m/s, dt s
  kYawTo,        // yaw deg
  kLand,
  kDisarm,
  kManual,       // roll, pitch, yaw deg, throttle rpm, dt s
};

const char* to_string(EventKind kind);

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::kArm;
  std::vector<double> args;

  std::string describe() const;  // "TAKEOFF 2"
};

struct Scenario {
  std::string name = "unnamed";
  bldc::Tier fidelity = bldc::Tier::kAveraged;
  double payload_kg = 0.0;
  double duration = 60.0;  // s
  std::uint64_t seed = 1;
  int telemetry_every = 1;  // control steps per telemetry row
  bool stop_on_depletion = true;
  airframe::Mount mount = airframe::Mount::kFree;
  std::vector<Event> timeline;

  /// Throws ValidationError.
  void validate() const;
};

Scenario parse_scenario(const Document& doc);
Scenario load_scenario(const std::filesystem::path& path);

const char* to_string(bldc::Tier tier);
/// "switched" or "averaged" (any case). Throws ValidationError.
bldc::Tier parse_fidelity(const std::string& text);
const char* to_string(airframe::Mount mount);

}  // namespace hexastack::harness
