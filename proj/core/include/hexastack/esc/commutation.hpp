#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "hexastack/bldc/motor.hpp"

namespace hexastack::esc {

enum class Mode : std::uint8_t { kIdle, kAlign, kOpenLoopRamp, kClosedLoop };

const char* to_string(Mode mode);

struct PIState {
  double kp = 5.0e-5;  // duty / rpm
  double ki = 6.0e-3;  // duty / (rpm * s)
  double integrator = 0.0;
};

struct PIResult {
  PIState pi;
  double duty = 0.0;
};

struct CommutationState {
  int sector = 0;
  Mode mode = Mode::kIdle;
  double t_last_commutation = 0.0;
  std::optional<double> t_zero_cross;
  std::optional<double> t_next_commutation;
  std::vector<bool> zc_filter_window;  // oldest first, at most W samples
  double duty = 0.0;
  PIState pi;
  double speed_estimate = 0.0;  // rpm, mechanical
  double target_speed = 0.0;    // rpm, mechanical
  // Previous sector's commutation-to-crossing interval, 0 when unknown.
  double last_half_interval = 0.0;
};

/// Phase connections for a sector. Throws InvalidSector outside 0..5.
std::array<bldc::Connection, 3> commutation_table(int sector);

/// Whether the floating phase's back-EMF rises through vdc/2 in the sector.
bool floating_rises(int sector);

/// First sector in which the rotor, aligned on `sector`, can be pulled forward.
int sector_after_align(int aligned_sector);

/// True once the floating voltage has reached vdc/2 in the expected direction.
bool sample_comparator(double floating_voltage, double vdc, bool rising);

/// True iff more than half of the window is true. Window size must be odd.
bool majority_filter(std::span<const bool> window);
bool majority_filter(const std::vector<bool>& window);

PIResult pi_speed_update(const PIState& pi, double target_rpm, double measured_rpm, double dt);

/// Mechanical rpm from the duration of one 60-degree electrical sector.
double rpm_from_sector_period(double sector_period, int pole_pairs);

/// Records a zero crossing at t_now in CLOSED_LOOP and schedules the next
/// commutation one measured half-sector later. The half-sector is the mean
/// of this sector's commutation-to-crossing interval and the previous one,
/// which equals the plain interval in steady state. Throws SpuriousZeroCross
/// when the sector already holds a crossing.
CommutationState on_zero_cross(const CommutationState& state, double t_now, int pole_pairs);

}  // namespace hexastack::esc
