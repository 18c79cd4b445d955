#pragma once

// Relay-feedback ultimate-gain experiment with Ziegler-Nichols gains.

#include <functional>
#include <vector>

#include "hexastack/flight/pid.hpp"

namespace hexastack::flight {

struct RelayConfig {
  double amplitude = 100.0;  // relay output, command units
  double hysteresis = 0.0;   // deg, switching band half-width
  double setpoint = 0.0;     // deg
  int settle_cycles = 2;     // discarded before measuring
  int measure_cycles = 4;
  double t_max = 20.0;       // s
  double max_spread = 0.1;   // allowed relative spread of measured periods
};

struct RelayResult {
  double ku = 0.0;         // command per deg
  double tu = 0.0;         // s
  double amplitude = 0.0;  // deg, half peak-to-peak of the limit cycle
  AxisPid gains;
};

/// Classic rule: kp = 0.6 Ku, ki = 1.2 Ku / Tu, kd = 0.075 Ku Tu.
AxisPid ziegler_nichols(double ku, double tu, double output_limit = 1500.0);

class RelayTuner {
 public:
  /// Throws NoOscillation when the relay amplitude is not positive.
  explicit RelayTuner(RelayConfig config);

  /// Feeds one measurement and returns the relay output to apply next.
  double update(double t, double measured);

  bool done() const { return done_; }
  /// Throws NoOscillation until a steady limit cycle has been measured.
  RelayResult result() const;
  const RelayConfig& config() const { return config_; }

 private:
  void on_cycle(double t);

  RelayConfig config_;
  double output_;
  double t_last_rise_ = -1.0;
  double hi_, lo_;
  std::vector<double> periods_;
  std::vector<double> amplitudes_;
  int cycles_ = 0;
  bool done_ = false;
};

/// Runs the relay against `plant`, which applies an input for one step of
/// `dt` and returns the new measurement. Throws NoOscillation on timeout.
RelayResult autotune(const RelayConfig& config, const std::function<double(double)>& plant,
                     double dt, double initial_measurement = 0.0);

}  // namespace hexastack::flight
