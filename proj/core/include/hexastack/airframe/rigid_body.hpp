#pragma once

// 6-DOF rigid body. World frame is NED (x north, y east, z down); body frame
// is x forward (front arm), y right, z down. Arm angles are measured from
// the front arm, counter-clockwise seen from above, so an arm at angle a
// sits at (L cos a, -L sin a, 0) in the body frame.

#include <array>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace hexastack::airframe {

inline constexpr int kMotors = 6;

struct VehicleParams {
  double mass_empty = 1.8;   // kg
  double payload = 0.0;      // kg
  double arm_length = 0.35;  // m
  Eigen::Vector3d inertia{0.03, 0.03, 0.05};  // kg*m^2, diagonal
  double avionics_power = 0.85;                // W
  double linear_drag = 0.3;                    // N per m/s
  double angular_damping = 0.12;               // N*m per rad/s
  double gravity = 9.80665;                    // m/s^2
  std::array<double, kMotors> arm_angles_deg{0.0, 60.0, 120.0, 180.0, 240.0, 300.0};
  // +1: reaction torque on the airframe is +z (nose right).
  std::array<int, kMotors> spin{-1, 1, -1, 1, -1, 1};

  double mass() const { return mass_empty + payload; }
  double weight() const { return mass() * gravity; }
  Eigen::Vector3d motor_position(int i) const;
  void validate() const;
};

// Constrains the body for bench experiments.
enum class Mount : std::uint8_t {
  kFree,
  kGimbalRoll,   // position fixed, only rotation about body x
  kGimbalPitch,  // only body y
  kGimbalYaw,    // only body z
  kFixed,        // thrust stand, nothing moves
};

struct RigidBodyState {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m, NED
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s, NED
  Eigen::Quaterniond attitude = Eigen::Quaterniond::Identity();  // body to world
  Eigen::Vector3d rates = Eigen::Vector3d::Zero();  // rad/s, body
  bool on_ground = true;
  double timestamp = 0.0;

  double altitude() const { return -position.z(); }
};

struct MotorLoads {
  std::array<double, kMotors> thrust{};  // N along body -z
  std::array<double, kMotors> torque{};  // N*m reaction magnitude
};

struct Wrench {
  Eigen::Vector3d force = Eigen::Vector3d::Zero();   // N, body
  Eigen::Vector3d moment = Eigen::Vector3d::Zero();  // N*m, body
};

/// Propulsive force and moment in the body frame.
Wrench body_wrench(const MotorLoads& loads, const VehicleParams& params);

/// Fourth-order Runge-Kutta step. Throws NonFiniteState.
RigidBodyState step_rigid_body(const RigidBodyState& state, const MotorLoads& loads,
                               const VehicleParams& params, double dt,
                               Mount mount = Mount::kFree);

/// Roll, pitch, yaw (ZYX, degrees, each in (-180, 180]).
Eigen::Vector3d euler_deg(const Eigen::Quaterniond& q);
Eigen::Quaterniond from_euler_deg(double roll, double pitch, double yaw);

/// World-frame acceleration implied by a state and its loads (used for the
/// accelerometer's specific force).
Eigen::Vector3d linear_acceleration(const RigidBodyState& state, const MotorLoads& loads,
                                    const VehicleParams& params);

}  // namespace hexastack::airframe
