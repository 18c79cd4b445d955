#pragma once

namespace hexastack::airframe {

// Constant-voltage energy store.
struct BatteryState {
  double voltage = 16.8;        // V
  double capacity_wh = 97.44;   // Wh
  double energy_wh = 97.44;     // Wh remaining
  double power_w = 0.0;         // W, last draw

  bool depleted() const { return energy_wh <= 0.0; }
  double fraction() const { return energy_wh / capacity_wh; }
  void validate() const;
};

/// Removes power * dt, clamping at empty. Throws std::invalid_argument for
/// negative power or dt.
BatteryState battery_step(const BatteryState& battery, double power_w, double dt);

/// Seconds until the remaining energy is gone at a constant draw.
double seconds_to_empty(const BatteryState& battery, double power_w);

}  // namespace hexastack::airframe
