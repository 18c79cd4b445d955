#include "hexastack/airframe/battery.hpp"

#include <limits>
#include <stdexcept>

#include "hexastack/errors.hpp"

namespace hexastack::airframe {

void BatteryState::validate() const {
  if (!(voltage > 0.0)) throw ValidationError("battery.voltage: must be > 0");
  if (!(capacity_wh > 0.0)) throw ValidationError("battery.capacity_wh: must be > 0");
  if (!(energy_wh >= 0.0 && energy_wh <= capacity_wh)) {
    throw ValidationError("battery.energy_wh: must be within [0, capacity_wh]");
  }
}

BatteryState battery_step(const BatteryState& battery, double power_w, double dt) {
  if (!(power_w >= 0.0)) throw std::invalid_argument("battery_step: power must be >= 0");
  if (!(dt >= 0.0)) throw std::invalid_argument("battery_step: dt must be >= 0");
  BatteryState next = battery;
  next.power_w = power_w;
  next.energy_wh = battery.energy_wh - power_w * dt / 3600.0;
  if (next.energy_wh < 0.0) next.energy_wh = 0.0;
  return next;
}

double seconds_to_empty(const BatteryState& battery, double power_w) {
  if (power_w <= 0.0) return std::numeric_limits<double>::infinity();
  return battery.energy_wh * 3600.0 / power_w;
}

}  // namespace hexastack::airframe
