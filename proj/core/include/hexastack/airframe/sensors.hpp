#pragma once

// Synthetic IMU triad and GPS stub.

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "hexastack/airframe/rigid_body.hpp"

namespace hexastack::airframe {

struct NoiseConfig {
  double accel_sigma = 0.0;  // g
  double gyro_sigma = 0.0;   // deg/s
  double mag_sigma = 0.0;    // unit-field fraction
  Eigen::Vector3d accel_bias = Eigen::Vector3d::Zero();  // g
  Eigen::Vector3d gyro_bias = Eigen::Vector3d::Zero();   // deg/s
  double mag_inclination_deg = 60.0;  // field dips below north
};

struct ImuReading {
  Eigen::Vector3d accel;  // specific force, g, body
  Eigen::Vector3d gyro;   // deg/s, body
  Eigen::Vector3d mag;    // unit field, body
};

class SensorSynth {
 public:
  SensorSynth(NoiseConfig noise, std::uint64_t seed);

  /// `accel_world` is the vehicle's NED acceleration; the accelerometer
  /// reports the body-frame specific force (a - g) / g.
  ImuReading sample(const RigidBodyState& state,
                    const Eigen::Vector3d& accel_world = Eigen::Vector3d::Zero(),
                    double gravity = 9.80665);

  const NoiseConfig& noise() const { return noise_; }

 private:
  Eigen::Vector3d gaussian(double sigma);

  NoiseConfig noise_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct GeoOrigin {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double alt_m = 0.0;
};

struct GeoFix {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double alt_m = 0.0;
};

inline constexpr double kMetersPerDegree = 111000.0;

/// Flat-earth conversion of an NED position.
GeoFix gps_stub(const RigidBodyState& state, const GeoOrigin& origin);

}  // namespace hexastack::airframe
