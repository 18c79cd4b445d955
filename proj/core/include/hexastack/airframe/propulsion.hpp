#pragma once

// Propeller aerodynamics, calibration against the measured operating points,
// and the two propulsion tiers (averaged ESC+motor lag, switched full plant).
//
//   thrust = k_thrust * omega^2        torque = k_drag * omega^2
//
// Steady electrical map of one motor at speed omega and acceleration alpha:
//   I = (k_drag omega^2 + b omega + J alpha) / kt
//   V = 2 R I + kt omega          P = V I   (DC side, no regeneration)

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "hexastack/bldc/motor.hpp"
#include "hexastack/comm/bus.hpp"
#include "hexastack/esc/firmware.hpp"
#include "hexastack/esc/rig.hpp"

namespace hexastack::airframe {

struct PropulsionParams {
  double k_thrust = 1.355113658076603e-05;  // N per (rad/s)^2
  double k_drag = 2.1681818529225648e-07;   // N*m per (rad/s)^2
  double tau_m = 0.02;           // s, closed-loop speed lag (averaged tier)

  void validate() const;
};

struct PropForces {
  double thrust = 0.0;  // N
  double torque = 0.0;  // N*m, reaction on the airframe
};

/// Throws std::invalid_argument for negative or non-finite omega.
PropForces prop_forces(double omega, const PropulsionParams& prop);

struct CalibrationTargets {
  double vdc = 16.8;            // V
  double full_current = 9.8;    // A per motor at full duty
  double full_thrust = 9.81;    // N per motor at full duty
  double hover_mass = 1.8;      // kg
  double hover_power = 170.0;   // W, all six motors plus avionics
  double hover_tolerance = 0.05;
  double avionics_power = 0.85;  // W
  double drag_ratio = 0.016;     // m, k_drag / k_thrust
  double gravity = 9.80665;      // m/s^2
  int motors = 6;
};

struct CalibrationResult {
  PropulsionParams prop;
  double friction = 0.0;          // N*m*s/rad, written back into MotorParams
  double omega_full = 0.0;        // rad/s
  double omega_hover = 0.0;       // rad/s at hover_mass
  double full_power = 0.0;        // W per motor
  double hover_power = 0.0;       // W total, avionics included
};

/// Solves k_thrust, k_drag and motor friction so that full duty on the given
/// motor draws full_current while producing full_thrust, then checks the
/// hover anchor. Throws CalibrationFailure when no physical solution exists
/// or the hover prediction misses its tolerance.
CalibrationResult calibrate_propulsion(const bldc::MotorParams& motor,
                                       const CalibrationTargets& targets = {});

struct ElectricalPoint {
  double current = 0.0;  // A, line current
  double voltage = 0.0;  // V, applied line voltage
  double power = 0.0;    // W
};

ElectricalPoint motor_electrical(double omega, double alpha, const bldc::MotorParams& motor,
                                 const PropulsionParams& prop);

/// Rotor speed at which the available link voltage is fully used.
double full_duty_speed(double vdc, const bldc::MotorParams& motor, const PropulsionParams& prop);

/// Rotor speed giving the requested thrust.
double speed_for_thrust(double thrust, const PropulsionParams& prop);

/// 63% rise time of the switched-tier speed loop for a small step under
/// propeller load.
double measure_speed_time_constant(const bldc::MotorParams& motor, const esc::EscConfig& esc,
                                   const PropulsionParams& prop, double vdc = 16.8,
                                   double rpm_from = 4000.0, double rpm_to = 4500.0);

// One ESC plus motor plus propeller, addressed on the command bus.
class PropulsionUnit : public comm::BusSlave {
 public:
  /// Advances the unit from t0 by dt (one scheduler tick).
  virtual void advance(double t0, double dt) = 0;
  virtual double omega() const = 0;              // rad/s at the end of the tick
  virtual double electrical_power() const = 0;   // W, mean over the last tick
  virtual std::uint8_t faults() const = 0;
  virtual double target_rpm() const = 0;
  /// A briefly reversed rotor (alignment) pushes and twists the other way.
  PropForces forces(const PropulsionParams& prop) const {
    const double w = omega();
    PropForces f = prop_forces(std::abs(w), prop);
    if (w < 0.0) f = {-f.thrust, -f.torque};
    return f;
  }
};

struct AveragedEscConfig {
  std::uint8_t address = 1;
  double vdc = 16.8;
  double min_closed_loop_rpm = 1000.0;
  double current_limit = 12.0;  // A
};

// Averaged tier: the closed speed loop is a first-order lag with time
// constant tau_m, bounded by what full duty (or the current limit) can
// deliver when accelerating and by coasting when decelerating.
class AveragedEsc : public PropulsionUnit {
 public:
  AveragedEsc(AveragedEscConfig config, bldc::MotorParams motor, PropulsionParams prop);

  std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> request) override;
  void advance(double t0, double dt) override;
  double omega() const override { return omega_; }
  double electrical_power() const override { return power_; }
  std::uint8_t faults() const override { return 0; }
  double target_rpm() const override { return target_rpm_; }

  bool armed() const { return armed_; }
  double duty() const { return duty_; }
  void set_omega(double omega) { omega_ = omega; }

 private:
  std::vector<std::uint8_t> reply(std::uint8_t command, std::vector<std::uint8_t> payload) const;

  AveragedEscConfig config_;
  bldc::MotorParams motor_;
  PropulsionParams prop_;
  bool armed_ = false;
  double target_rpm_ = 0.0;
  double omega_ = 0.0;
  double power_ = 0.0;
  double duty_ = 0.0;
};

// Switched tier: the full ESC firmware driving the motor plant at 20 kHz,
// loaded by the propeller drag torque.
class SwitchedEsc : public PropulsionUnit {
 public:
  SwitchedEsc(esc::EscConfig esc, bldc::MotorParams motor, PropulsionParams prop, double vdc);

  std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> request) override;
  void advance(double t0, double dt) override;
  double omega() const override { return rig_.motor().omega_mech; }
  double electrical_power() const override { return power_; }
  std::uint8_t faults() const override { return rig_.esc().faults(); }
  double target_rpm() const override { return rig_.esc().state().target_speed; }

  const esc::EscMotorRig& rig() const { return rig_; }

 private:
  esc::EscMotorRig rig_;
  double vdc_;
  double power_ = 0.0;
};

}  // namespace hexastack::airframe
