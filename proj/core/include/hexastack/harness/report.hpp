#pragma once

// Run metrics from a telemetry log.
//   rise time   10% to 90% of the step, first crossings
//   overshoot   peak excursion past the target, fraction of the step size
//   settling    last instant |error| exceeds 5% of the step, relative to the step time

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hexastack/harness/simulation.hpp"
#include "hexastack/harness/telemetry.hpp"

namespace hexastack::harness {

struct StepMetrics {
  std::string label;       // e.g. "roll 0 -> 10 at t=5"
  double t_step = 0.0;
  double from = 0.0;
  double to = 0.0;
  double rise_time = 0.0;  // s, NaN if 90% is never reached
  double overshoot = 0.0;  // fraction of |to - from|
  double settling_time = 0.0;  // s
  bool settled = false;    // the response ends inside the band
};

/// Step metrics of samples (t[i], y[i]) for a step at t_step. Only samples
/// with t >= t_step are used. Throws EmptyLog when none remain.
StepMetrics step_response(const std::vector<double>& t, const std::vector<double>& y, double t_step,
                          double from, double to, double band = 0.05);

struct Report {
  double duration = 0.0;
  double energy_used_wh = 0.0;
  double mean_power_w = 0.0;       // mean of the step rows' power
  std::optional<double> endurance;  // s, when the log ends with an empty battery
  std::vector<StepMetrics> maneuvers;
};

/// Throws EmptyLog for a log without step rows.
Report report(const TelemetryLog& log);

/// Maneuver metrics for one attitude axis (0 roll, 1 pitch, 2 yaw) of every
/// setpoint step between consecutive changes of the mission setpoint.
std::vector<StepMetrics> attitude_steps(const TelemetryLog& log, int axis);

void write_summary(std::ostream& out, const RunSummary& summary, const Report& report);

}  // namespace hexastack::harness
