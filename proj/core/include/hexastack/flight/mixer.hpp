#pragma once

#include <array>

namespace hexastack::flight {

using Setpoints = std::array<double, 6>;  // rpm, motors 1..6

struct MixerGeometry {
  std::array<double, 6> arm_angles_deg{0.0, 60.0, 120.0, 180.0, 240.0, 300.0};
  std::array<int, 6> spin{-1, 1, -1, 1, -1, 1};
  double k_roll = 1.0;   // rpm per unit command
  double k_pitch = 1.0;
  double k_yaw = 1.0;

  /// Throws ValidationError unless spin and arm angles are balanced.
  void validate() const;
};

struct MixInput {
  double throttle = 0.0;  // rpm
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

struct MotorLimits {
  double min_rpm = 0.0;
  double max_rpm = 9000.0;
};

/// setpoint_i = T + k_roll R sin(a_i) + k_pitch P cos(a_i) + k_yaw Y spin_i
Setpoints mix(const MixInput& in, const MixerGeometry& geometry);

/// Feasible setpoints within the limits. Yaw authority is scaled down first,
/// then roll and pitch together, and the throttle is clipped last.
Setpoints saturate(const MixInput& in, const MixerGeometry& geometry, const MotorLimits& limits);

}  // namespace hexastack::flight
