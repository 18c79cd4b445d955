#pragma once

namespace hexastack::flight {

struct AxisPid {
  double kp = 0.0;  // command per deg
  double ki = 0.0;  // command per deg*s
  double kd = 0.0;  // command per deg/s
  double integrator = 0.0;
  double last_error = 0.0;
  double output_limit = 1500.0;

  void validate(const char* axis) const;
};

struct PidResult {
  AxisPid pid;
  double command = 0.0;
};

/// command = kp e + integrator - kd rate, clamped to +-output_limit. The
/// error is wrapped to (-180, 180] and the integrator to +-output_limit.
PidResult pid_update(const AxisPid& pid, double setpoint, double measured, double rate, double dt);

}  // namespace hexastack::flight
