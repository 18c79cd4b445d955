#include "hexastack/flight/attitude.hpp"

#include <cmath>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::flight {
namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Blend two angles along the shorter arc.
double blend(double gyro_deg, double ref_deg, double alpha) {
  return wrap_deg(ref_deg + alpha * wrap_deg(gyro_deg - ref_deg));
}
}  // namespace

double wrap_deg(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w <= -180.0) w += 360.0;
  if (w > 180.0) w -= 360.0;
  return w;
}

Eigen::Vector2d tilt_from_accel(const Eigen::Vector3d& a) {
  const double roll = std::atan2(-a.y(), -a.z());
  const double pitch = std::atan2(a.x(), std::sqrt(a.y() * a.y() + a.z() * a.z()));
  return {roll / kDeg, pitch / kDeg};
}

double heading_from_mag(const Eigen::Vector3d& m, double roll_deg, double pitch_deg) {
  const double phi = roll_deg * kDeg;
  const double theta = pitch_deg * kDeg;
  // Rotate the body reading back to the level frame.
  const double xh = m.x() * std::cos(theta) + m.y() * std::sin(phi) * std::sin(theta) +
                    m.z() * std::cos(phi) * std::sin(theta);
  const double yh = m.y() * std::cos(phi) - m.z() * std::sin(phi);
  return wrap_deg(std::atan2(-yh, xh) / kDeg);
}

AttitudeState fuse_imu(const Eigen::Vector3d& accel, const Eigen::Vector3d& gyro,
                       const Eigen::Vector3d& mag, const AttitudeState& state, double dt,
                       const FusionConfig& config) {
  if (!(dt > 0.0)) throw std::invalid_argument("fuse_imu: dt must be > 0");
  AttitudeState next = state;
  next.body_rates = gyro;

  // Euler-angle kinematics from body rates.
  const double phi = state.roll * kDeg;
  const double theta = state.pitch * kDeg;
  const double p = gyro.x(), q = gyro.y(), r = gyro.z();
  const double cos_theta = std::max(std::cos(theta), 1e-6);
  const double roll_dot = p + (q * std::sin(phi) + r * std::cos(phi)) * std::tan(theta);
  const double pitch_dot = q * std::cos(phi) - r * std::sin(phi);
  const double yaw_dot = (q * std::sin(phi) + r * std::cos(phi)) / cos_theta;

  double roll = wrap_deg(state.roll + roll_dot * dt);
  double pitch = state.pitch + pitch_dot * dt;
  double raw_yaw = wrap_deg(state.raw_yaw + yaw_dot * dt);

  const double g = accel.norm();
  if (config.use_accel && g >= config.accel_min_g && g <= config.accel_max_g) {
    const Eigen::Vector2d tilt = tilt_from_accel(accel);
    roll = blend(roll, tilt.x(), config.alpha);
    pitch = config.alpha * pitch + (1.0 - config.alpha) * tilt.y();
  }
  if (config.use_mag && mag.norm() > 0.0) {
    raw_yaw = blend(raw_yaw, heading_from_mag(mag, roll, pitch), config.alpha);
  }
  next.roll = roll;
  next.pitch = wrap_deg(pitch);
  next.raw_yaw = raw_yaw;
  next.yaw = wrap_deg(raw_yaw - next.yaw_offset);
  return next;
}

AttitudeState reset_heading(const AttitudeState& state) {
  if (state.body_rates.cwiseAbs().maxCoeff() >= 1.0) {
    throw NotStationary("heading reset needs body rates below 1 deg/s (max " +
                        std::to_string(state.body_rates.cwiseAbs().maxCoeff()) + ")");
  }
  AttitudeState next = state;
  next.yaw_offset = state.raw_yaw;
  next.yaw = 0.0;
  return next;
}

}  // namespace hexastack::flight
