#include "hexastack/esc/commutation.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::esc {

using bldc::Connection;

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::kIdle: return "IDLE";
    case Mode::kAlign: return "ALIGN";
    case Mode::kOpenLoopRamp: return "OPEN_LOOP_RAMP";
    case Mode::kClosedLoop: return "CLOSED_LOOP";
  }
  return "?";
}

std::array<Connection, 3> commutation_table(int sector) {
  constexpr auto H = Connection::kHigh;
  constexpr auto L = Connection::kLow;
  constexpr auto F = Connection::kFloat;
  static constexpr std::array<std::array<Connection, 3>, 6> kTable{{
      {H, L, F},  // 0: A high, B low
      {H, F, L},  // 1: A high, C low
      {F, H, L},  // 2: B high, C low
      {L, H, F},  // 3: B high, A low
      {L, F, H},  // 4: C high, A low
      {F, L, H},  // 5: C high, B low
  }};
  if (sector < 0 || sector > 5) throw InvalidSector("sector " + std::to_string(sector));
  return kTable[static_cast<std::size_t>(sector)];
}

bool floating_rises(int sector) { return sector % 2 == 1; }

int sector_after_align(int aligned_sector) { return (aligned_sector + 2) % 6; }

bool sample_comparator(double floating_voltage, double vdc, bool rising) {
  const double threshold = 0.5 * vdc;
  return rising ? floating_voltage >= threshold : floating_voltage <= threshold;
}

bool majority_filter(std::span<const bool> window) {
  if (window.size() % 2 == 0) throw std::invalid_argument("majority window must be odd");
  const auto count = std::count(window.begin(), window.end(), true);
  return static_cast<std::size_t>(count) * 2 > window.size();
}

bool majority_filter(const std::vector<bool>& window) {
  if (window.size() % 2 == 0) throw std::invalid_argument("majority window must be odd");
  const auto count = std::count(window.begin(), window.end(), true);
  return static_cast<std::size_t>(count) * 2 > window.size();
}

PIResult pi_speed_update(const PIState& pi, double target_rpm, double measured_rpm, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("pi_speed_update: dt must be > 0");
  const double e = target_rpm - measured_rpm;
  PIResult out;
  out.duty = std::clamp(pi.kp * e + pi.integrator, 0.0, 1.0);
  out.pi = pi;
  out.pi.integrator = std::clamp(pi.integrator + pi.ki * e * dt, 0.0, 1.0);
  return out;
}

double rpm_from_sector_period(double sector_period, int pole_pairs) {
  if (!(sector_period > 0.0) || pole_pairs < 1) return 0.0;
  return 60.0 / (6.0 * sector_period * pole_pairs);
}

CommutationState on_zero_cross(const CommutationState& state, double t_now, int pole_pairs) {
  if (state.mode != Mode::kClosedLoop) {
    throw std::logic_error("on_zero_cross requires CLOSED_LOOP");
  }
  if (state.t_zero_cross) {
    throw SpuriousZeroCross("second crossing in sector " + std::to_string(state.sector) +
                            " at t=" + std::to_string(t_now));
  }
  CommutationState next = state;
  const double half = t_now - state.t_last_commutation;
  const double wait =
      state.last_half_interval > 0.0 ? 0.5 * (half + state.last_half_interval) : half;
  next.t_zero_cross = t_now;
  next.t_next_commutation = t_now + wait;
  next.speed_estimate = rpm_from_sector_period(2.0 * wait, pole_pairs);
  next.last_half_interval = half;
  return next;
}

}  // namespace hexastack::esc
