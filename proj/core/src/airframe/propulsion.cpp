#include "hexastack/airframe/propulsion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hexastack/comm/frames.hpp"
#include "hexastack/errors.hpp"

namespace hexastack::airframe {

using comm::ErrorCode;
using comm::Opcode;

void PropulsionParams::validate() const {
  if (!(k_thrust > 0.0)) throw ValidationError("propulsion.k_thrust: must be > 0");
  if (!(k_drag > 0.0)) throw ValidationError("propulsion.k_drag: must be > 0");
  if (!(tau_m > 0.0)) throw ValidationError("propulsion.tau_m: must be > 0");
}

PropForces prop_forces(double omega, const PropulsionParams& prop) {
  if (!(omega >= 0.0) || !std::isfinite(omega)) {
    throw std::invalid_argument("prop_forces: omega must be finite and >= 0");
  }
  const double w2 = omega * omega;
  return {prop.k_thrust * w2, prop.k_drag * w2};
}

ElectricalPoint motor_electrical(double omega, double alpha, const bldc::MotorParams& motor,
                                 const PropulsionParams& prop) {
  const double load = prop.k_drag * omega * omega + motor.friction_coeff * omega +
                      motor.rotor_inertia * alpha;
  ElectricalPoint p;
  p.current = std::max(0.0, load / motor.kt);
  p.voltage = 2.0 * motor.r_phase * p.current + motor.kt * omega;
  p.power = p.voltage * p.current;
  return p;
}

double full_duty_speed(double vdc, const bldc::MotorParams& motor, const PropulsionParams& prop) {
  // Root of vdc = 2R (k_drag w^2 + b w) / kt + kt w.
  const double two_r = 2.0 * motor.r_phase;
  const double a = two_r * prop.k_drag / motor.kt;
  const double b = two_r * motor.friction_coeff / motor.kt + motor.kt;
  return (-b + std::sqrt(b * b + 4.0 * a * vdc)) / (2.0 * a);
}

double speed_for_thrust(double thrust, const PropulsionParams& prop) {
  if (!(thrust >= 0.0)) throw std::invalid_argument("speed_for_thrust: thrust must be >= 0");
  return std::sqrt(thrust / prop.k_thrust);
}

CalibrationResult calibrate_propulsion(const bldc::MotorParams& motor,
                                       const CalibrationTargets& t) {
  auto fail = [](const std::string& why) { throw CalibrationFailure("calibration: " + why); };
  if (!(t.vdc > 0.0 && t.full_current > 0.0 && t.full_thrust > 0.0 && t.hover_mass > 0.0)) {
    fail("targets must be positive");
  }
  CalibrationResult r;
  // Full duty: the whole link voltage is applied across the driven pair.
  r.omega_full = (t.vdc - 2.0 * motor.r_phase * t.full_current) / motor.kt;
  if (!(r.omega_full > 0.0)) fail("full-duty current leaves no back-EMF headroom");
  r.prop.k_thrust = t.full_thrust / (r.omega_full * r.omega_full);
  r.prop.k_drag = t.drag_ratio * r.prop.k_thrust;
  // Torque balance at full duty fixes the friction that absorbs the rest.
  const double torque = motor.kt * t.full_current;
  const double aero = r.prop.k_drag * r.omega_full * r.omega_full;
  r.friction = (torque - aero) / r.omega_full;
  if (!(r.friction >= 0.0)) {
    fail("propeller drag alone exceeds the full-duty torque (friction " +
         std::to_string(r.friction) + ")");
  }

  bldc::MotorParams fitted = motor;
  fitted.friction_coeff = r.friction;
  r.full_power = motor_electrical(r.omega_full, 0.0, fitted, r.prop).power;
  r.omega_hover = speed_for_thrust(t.hover_mass * t.gravity / t.motors, r.prop);
  r.hover_power =
      t.motors * motor_electrical(r.omega_hover, 0.0, fitted, r.prop).power + t.avionics_power;
  if (std::abs(r.hover_power - t.hover_power) > t.hover_tolerance * t.hover_power) {
    fail("hover power " + std::to_string(r.hover_power) + " W misses " +
         std::to_string(t.hover_power) + " W by more than " +
         std::to_string(100.0 * t.hover_tolerance) + "%");
  }
  return r;
}

double measure_speed_time_constant(const bldc::MotorParams& motor, const esc::EscConfig& esc,
                                   const PropulsionParams& prop, double vdc, double rpm_from,
                                   double rpm_to) {
  esc::RigConfig rc;
  rc.vdc = vdc;
  rc.k_drag = prop.k_drag;
  esc::EscMotorRig rig(esc, motor, rc);
  rig.esc().arm();
  rig.esc().set_target(rpm_from);
  rig.run(1.0);
  const double start = rig.speed_rpm();
  rig.esc().set_target(rpm_to);
  const double t0 = rig.time();
  const double threshold = start + 0.632 * (rpm_to - start);
  while (rig.time() - t0 < 1.0) {
    const auto rec = rig.step();
    if ((rpm_to - start) * (rec.speed_true - threshold) >= 0.0) return rec.t - t0;
  }
  throw CalibrationFailure("speed loop did not reach 63% of a " + std::to_string(rpm_to - rpm_from) +
                           " rpm step within 1 s");
}

// ------------------------------------------------------------- AveragedEsc

AveragedEsc::AveragedEsc(AveragedEscConfig config, bldc::MotorParams motor, PropulsionParams prop)
    : config_(config), motor_(motor), prop_(prop) {}

std::vector<std::uint8_t> AveragedEsc::reply(std::uint8_t command,
                                             std::vector<std::uint8_t> payload) const {
  return comm::encode_frame({config_.address, command, std::move(payload)});
}

std::vector<std::uint8_t> AveragedEsc::handle_frame(std::span<const std::uint8_t> request) {
  auto error = [&](ErrorCode code) {
    return reply(comm::kErrorReply, {static_cast<std::uint8_t>(code)});
  };
  comm::CommandFrame frame;
  try {
    frame = comm::decode_frame(request);
  } catch (const CrcError&) {
    return error(ErrorCode::kCrc);
  } catch (const MalformedLength&) {
    return error(ErrorCode::kMalformedLength);
  }
  if (frame.address != config_.address) return error(ErrorCode::kWrongAddress);
  const auto ack = static_cast<std::uint8_t>(frame.command | comm::kAckBit);
  const bool bare = frame.payload.empty();
  switch (static_cast<Opcode>(frame.command)) {
    case Opcode::kSetSpeed:
      if (frame.payload.size() != 2) return error(ErrorCode::kMalformedLength);
      target_rpm_ = comm::read_u16_le(frame.payload, 0);
      return reply(ack, {});
    case Opcode::kGetStatus: {
      if (!bare) return error(ErrorCode::kMalformedLength);
      comm::StatusReply st;
      st.speed_rpm = static_cast<std::uint16_t>(
          std::clamp(std::lround(bldc::rad_s_to_rpm(omega_)), 0L, 65535L));
      st.duty = static_cast<std::uint8_t>(std::lround(duty_ * 255.0));
      st.flags = static_cast<std::uint8_t>((armed_ ? esc::kFlagArmed : 0) |
                                           (omega_ > 0.0 && armed_ ? esc::kFlagClosedLoop : 0));
      return reply(ack, comm::encode_status(st));
    }
    case Opcode::kArm:
      if (!bare) return error(ErrorCode::kMalformedLength);
      armed_ = true;
      return reply(ack, {});
    case Opcode::kDisarm:
      if (!bare) return error(ErrorCode::kMalformedLength);
      armed_ = false;
      target_rpm_ = 0.0;
      return reply(ack, {});
  }
  return error(ErrorCode::kUnknownCommand);
}

void AveragedEsc::advance(double /*t0*/, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("AveragedEsc::advance: dt must be > 0");
  const double w0 = omega_;
  const double j = motor_.rotor_inertia;
  // Natural deceleration with the drive floated.
  const double coast = -(prop_.k_drag * w0 * w0 + motor_.friction_coeff * w0) / j;

  const bool driving = armed_ && target_rpm_ >= config_.min_closed_loop_rpm;
  double alpha = coast;
  if (driving) {
    const double w_max = full_duty_speed(config_.vdc, motor_, prop_);
    const double target = std::min(bldc::rpm_to_rad_s(target_rpm_), w_max);
    const double lag = target + (w0 - target) * std::exp(-dt / prop_.tau_m);
    alpha = (lag - w0) / dt;
    // Full duty, or the current limit, bounds the acceleration.
    const double i_avail =
        std::min(config_.current_limit, (config_.vdc - motor_.kt * w0) / (2.0 * motor_.r_phase));
    const double alpha_max = (motor_.kt * i_avail) / j + coast;
    alpha = std::clamp(alpha, coast, std::max(coast, alpha_max));
  }
  omega_ = std::max(0.0, w0 + alpha * dt);
  const double w_mid = 0.5 * (w0 + omega_);
  if (driving && omega_ > 0.0) {
    const auto e = motor_electrical(w_mid, (omega_ - w0) / dt, motor_, prop_);
    power_ = e.power;
    duty_ = std::clamp(e.voltage / config_.vdc, 0.0, 1.0);
  } else {
    power_ = 0.0;
    duty_ = 0.0;
  }
}

// -------------------------------------------------------------- SwitchedEsc

SwitchedEsc::SwitchedEsc(esc::EscConfig esc, bldc::MotorParams motor, PropulsionParams prop,
                         double vdc)
    : rig_(esc, motor,
           [&] {
             esc::RigConfig rc;
             rc.vdc = vdc;
             rc.k_drag = prop.k_drag;
             return rc;
           }()),
      vdc_(vdc) {}

std::vector<std::uint8_t> SwitchedEsc::handle_frame(std::span<const std::uint8_t> request) {
  return rig_.esc().handle_frame(request);
}

void SwitchedEsc::advance(double t0, double dt) {
  const double period = 1.0 / rig_.esc().config().pwm_frequency;
  const auto target_periods = static_cast<std::uint64_t>(std::llround((t0 + dt) / period));
  double charge = 0.0;
  const std::uint64_t start = rig_.periods();
  while (rig_.periods() < target_periods) charge += rig_.step().i_dc * period;
  const auto n = rig_.periods() - start;
  power_ = n > 0 ? vdc_ * charge / (static_cast<double>(n) * period) : 0.0;
}

}  // namespace hexastack::airframe
