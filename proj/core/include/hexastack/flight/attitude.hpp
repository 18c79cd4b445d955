#pragma once

// Complementary-filter attitude estimator. Angles in degrees, wrapped to
// (-180, 180]; body rates in deg/s.

#include <Eigen/Dense>

namespace hexastack::flight {

double wrap_deg(double deg);

struct AttitudeState {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;      // reported: raw_yaw - yaw_offset
  double raw_yaw = 0.0;  // heading before the reset offset
  double yaw_offset = 0.0;
  Eigen::Vector3d body_rates = Eigen::Vector3d::Zero();  // deg/s
};

struct FusionConfig {
  double alpha = 0.98;  // gyro weight per step
  bool use_accel = true;
  bool use_mag = true;
  double accel_min_g = 0.5;  // accelerometer correction gate
  double accel_max_g = 1.5;
};

/// Roll and pitch from a specific-force reading (g, body frame).
Eigen::Vector2d tilt_from_accel(const Eigen::Vector3d& accel);

/// Tilt-compensated magnetic heading, degrees.
double heading_from_mag(const Eigen::Vector3d& mag, double roll_deg, double pitch_deg);

AttitudeState fuse_imu(const Eigen::Vector3d& accel, const Eigen::Vector3d& gyro,
                       const Eigen::Vector3d& mag, const AttitudeState& state, double dt,
                       const FusionConfig& config = {});

/// Makes the current heading the forward reference. Throws NotStationary
/// when any body rate is 1 deg/s or more.
AttitudeState reset_heading(const AttitudeState& state);

}  // namespace hexastack::flight
