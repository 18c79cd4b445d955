#pragma once

// Validated parameter set for a simulation run, loaded from sectioned text.
// Every key is listed in docs/config_format.md; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "hexastack/airframe/battery.hpp"
#include "hexastack/airframe/propulsion.hpp"
#include "hexastack/airframe/rigid_body.hpp"
#include "hexastack/airframe/sensors.hpp"
#include "hexastack/bldc/motor.hpp"
#include "hexastack/comm/bus.hpp"
#include "hexastack/esc/firmware.hpp"
#include "hexastack/flight/attitude.hpp"
#include "hexastack/flight/autotune.hpp"
#include "hexastack/flight/controller.hpp"
#include "hexastack/harness/sectioned_text.hpp"

namespace hexastack::harness {

// Takeoff and landing are throttle offsets around the hover speed with an
// altitude check; there is no altitude loop.
struct MissionConfig {
  double takeoff_offset_rpm = 400.0;
  double landing_offset_rpm = 300.0;
  double altitude_band = 0.5;  // m, hold re-engages climb or brake outside it
  double land_speed = 0.6;     // m/s, descent rate kept during LAND
  double idle_rpm = 1200.0;    // armed on the ground
  double max_tilt_deg = 25.0;  // bound on FORWARD pitch
};

struct SimConfig {
  bldc::MotorParams motor;
  esc::EscConfig esc;
  airframe::PropulsionParams propulsion;
  airframe::VehicleParams vehicle;
  airframe::BatteryState battery;
  airframe::NoiseConfig sensors;
  double imu_rate_hz = 200.0;
  double gps_rate_hz = 1.0;
  airframe::GeoOrigin origin;
  comm::BusConfig bus;
  comm::UartConfig uart;
  flight::ControllerConfig flight;  // flight.hover_rpm 0 derives it from thrust
  flight::FusionConfig fusion;
  MissionConfig mission;
  flight::RelayConfig autotune;
  airframe::CalibrationTargets calibration;

  SimConfig();

  /// Throws ValidationError naming the offending key.
  void validate() const;

  /// Configured hover speed, or the speed whose thrust carries the given
  /// total mass when flight.hover_rpm is 0.
  double hover_rpm(double payload_kg = 0.0) const;
  airframe::CalibrationTargets calibration_targets() const;
};

/// Throws ParseError (bad syntax, bad number) or ValidationError (unknown
/// key, failed invariant).
SimConfig parse_config(const Document& doc);
SimConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key; parse_config(write_config(c)) reproduces c.
std::string write_config(const SimConfig& config);

/// FNV-1a 64 of the canonical text.
std::uint64_t config_hash(const SimConfig& config);
std::uint64_t fnv1a64(std::string_view bytes);

/// Writes a calibration result into the motor and propulsion sections.
void apply_calibration(SimConfig& config, const airframe::CalibrationResult& result);

std::string format_double(double v);

}  // namespace hexastack::harness
