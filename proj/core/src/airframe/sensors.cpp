#include "hexastack/airframe/sensors.hpp"

#include <cmath>

namespace hexastack::airframe {
namespace {
constexpr double kDeg = 3.14159265358979323846 / 180.0;
}

SensorSynth::SensorSynth(NoiseConfig noise, std::uint64_t seed) : noise_(noise), rng_(seed) {}

Eigen::Vector3d SensorSynth::gaussian(double sigma) {
  if (sigma <= 0.0) return Eigen::Vector3d::Zero();
  // Drawn in a fixed order so streams are reproducible per seed.
  const double x = normal_(rng_);
  const double y = normal_(rng_);
  const double z = normal_(rng_);
  return sigma * Eigen::Vector3d(x, y, z);
}

ImuReading SensorSynth::sample(const RigidBodyState& state, const Eigen::Vector3d& accel_world,
                               double gravity) {
  const Eigen::Matrix3d world_to_body = state.attitude.conjugate().toRotationMatrix();
  const Eigen::Vector3d g(0.0, 0.0, gravity);
  const double inc = noise_.mag_inclination_deg * kDeg;
  const Eigen::Vector3d field(std::cos(inc), 0.0, std::sin(inc));

  ImuReading r;
  r.accel = world_to_body * (accel_world - g) / gravity + noise_.accel_bias + gaussian(noise_.accel_sigma);
  r.gyro = state.rates / kDeg + noise_.gyro_bias + gaussian(noise_.gyro_sigma);
  r.mag = world_to_body * field + gaussian(noise_.mag_sigma);
  return r;
}

GeoFix gps_stub(const RigidBodyState& state, const GeoOrigin& origin) {
  GeoFix fix;
  fix.lat_deg = origin.lat_deg + state.position.x() / kMetersPerDegree;
  fix.lon_deg = origin.lon_deg +
                state.position.y() / (kMetersPerDegree * std::cos(origin.lat_deg * kDeg));
  fix.alt_m = origin.alt_m + state.altitude();
  return fix;
}

}  // namespace hexastack::airframe
