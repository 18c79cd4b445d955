#include "hexastack/flight/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::flight {

const char* to_string(CommandSource source) {
  switch (source) {
    case CommandSource::kMission: return "MISSION";
    case CommandSource::kManual: return "MANUAL";
    case CommandSource::kHoverHold: return "HOVER_HOLD";
  }
  return "?";
}

void ControllerConfig::validate() const {
  pid[0].validate("roll");
  pid[1].validate("pitch");
  pid[2].validate("yaw");
  geometry.validate();
  if (!(limits.min_rpm >= 0.0 && limits.min_rpm < limits.max_rpm)) {
    throw ValidationError("flight.min_rpm: need 0 <= min_rpm < max_rpm");
  }
  if (limits.max_rpm > 65535.0) throw ValidationError("flight.max_rpm: must fit 16 bits");
  if (!(rate_hz > 0.0)) throw ValidationError("flight.rate_hz: must be > 0");
  if (!(hover_rpm >= 0.0)) throw ValidationError("flight.hover_rpm: must be >= 0");
  if (!(manual_timeout > 0.0)) throw ValidationError("flight.manual_timeout: must be > 0");
}

FlightController::FlightController(ControllerConfig config) : config_(config) {
  config_.validate();
}

void FlightController::arm() {
  armed_ = true;
  for (auto& p : config_.pid) p.integrator = 0.0;
  filter_primed_ = false;
}

void FlightController::disarm() { armed_ = false; }

void FlightController::manual_input(const AttitudeSetpoint& setpoint, double t_received) {
  manual_ = setpoint;
  t_manual_ = t_received;
}

CommandSource FlightController::active_source(double t_now) const {
  if (manual_ && t_now - t_manual_ < config_.manual_timeout) return CommandSource::kManual;
  if (mission_) return CommandSource::kMission;
  return CommandSource::kHoverHold;
}

AttitudeSetpoint FlightController::select(double t_now, CommandSource& source) const {
  source = active_source(t_now);
  switch (source) {
    case CommandSource::kManual: return *manual_;
    case CommandSource::kMission: return *mission_;
    case CommandSource::kHoverHold: break;
  }
  AttitudeSetpoint hold;
  hold.throttle = config_.hover_rpm;
  return hold;
}

void FlightController::override_axis(Axis axis, std::optional<double> command) {
  override_[static_cast<std::size_t>(axis)] = command;
}

void FlightController::set_gains(Axis axis, const AxisPid& gains) {
  auto& p = config_.pid[static_cast<std::size_t>(axis)];
  const double limit = p.output_limit;
  p = gains;
  p.integrator = 0.0;
  if (!(gains.output_limit > 0.0)) p.output_limit = limit;
}

ControlOutput FlightController::control_step(const AttitudeState& att, double t_now) {
  if (!armed_) throw DisarmedError("control_step called while disarmed");
  ControlOutput out;
  out.t = t_now;
  out.setpoint = select(t_now, out.source);

  const std::array<double, 3> raw{out.setpoint.roll, out.setpoint.pitch, out.setpoint.yaw};
  const double dt = period();
  if (!filter_primed_) {
    filtered_ = raw;
    filter_primed_ = true;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    const auto& p = config_.pid[a];
    if (config_.prefilter && p.ki > 0.0 && p.kp > 0.0) {
      const double tau = p.kp / p.ki;
      filtered_[a] = wrap_deg(filtered_[a] + (1.0 - std::exp(-dt / tau)) * wrap_deg(raw[a] - filtered_[a]));
    } else {
      filtered_[a] = raw[a];
    }
  }
  out.filtered = {filtered_[0], filtered_[1], filtered_[2], out.setpoint.throttle};

  const std::array<double, 3> measured{att.roll, att.pitch, att.yaw};
  for (std::size_t a = 0; a < 3; ++a) {
    if (override_[a]) {
      out.command[a] = *override_[a];
      continue;
    }
    const auto r = pid_update(config_.pid[a], filtered_[a], measured[a], att.body_rates[static_cast<Eigen::Index>(a)], dt);
    config_.pid[a] = r.pid;
    out.command[a] = r.command;
  }

  const MixInput in{out.setpoint.throttle, out.command[0], out.command[1], out.command[2]};
  out.rpm = saturate(in, config_.geometry, config_.limits);
  out.frames.reserve(6);
  for (std::size_t i = 0; i < 6; ++i) {
    const auto rpm = static_cast<std::uint16_t>(std::lround(out.rpm[i]));
    out.frames.push_back(comm::make_set_speed(config_.addresses[i], rpm));
  }
  return out;
}

}  // namespace hexastack::flight
