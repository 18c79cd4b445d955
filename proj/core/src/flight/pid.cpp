#include "hexastack/flight/pid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hexastack/errors.hpp"
#include "hexastack/flight/attitude.hpp"

namespace hexastack::flight {

void AxisPid::validate(const char* axis) const {
  const std::string key = std::string("flight.") + axis + "_";
  if (!(kp >= 0.0)) throw ValidationError(key + "kp: must be >= 0");
  if (!(ki >= 0.0)) throw ValidationError(key + "ki: must be >= 0");
  if (!(kd >= 0.0)) throw ValidationError(key + "kd: must be >= 0");
  if (!(output_limit > 0.0)) throw ValidationError(key + "limit: must be > 0");
}

PidResult pid_update(const AxisPid& pid, double setpoint, double measured, double rate, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pid_update: dt must be > 0");
  PidResult out;
  out.pid = pid;
  const double e = wrap_deg(setpoint - measured);
  const double lim = pid.output_limit;
  out.pid.integrator = std::clamp(pid.integrator + pid.ki * e * dt, -lim, lim);
  out.pid.last_error = e;
  out.command = std::clamp(pid.kp * e + out.pid.integrator - pid.kd * rate, -lim, lim);
  return out;
}

}  // namespace hexastack::flight
