#pragma once

// Plant oracles shared by the unit tests and the acceptance run: ideal
// commutation driven by the true rotor angle, an analytic energy audit and
// an integrator step-halving check.

#include <algorithm>
#include <cmath>

#include "hexastack/bldc/motor.hpp"

namespace hexastack::oracle {

using namespace hexastack::bldc;

inline constexpr double kDeg = kPi / 180.0;

inline PhaseDrive six_step(int high, int low, double vdc, double duty) {
  PhaseDrive d = PhaseDrive::all_float(vdc);
  d.connection[static_cast<std::size_t>(high)] = Connection::kHigh;
  d.connection[static_cast<std::size_t>(low)] = Connection::kLow;
  d.duty = duty;
  return d;
}

// Ideal commutation by true rotor angle, sector k covering [30 + 60k, 90 + 60k).
inline PhaseDrive ideal_drive(const MotorState& s, const MotorParams& p, double vdc, double duty) {
  static constexpr int kHigh[6] = {0, 0, 1, 1, 2, 2};
  static constexpr int kLow[6] = {1, 2, 2, 0, 0, 1};
  const double deg = electrical_angle(s, p) / kDeg;
  const int sector = static_cast<int>(std::floor(std::fmod(deg - 30.0 + 360.0, 360.0) / 60.0)) % 6;
  return six_step(kHigh[sector], kLow[sector], vdc, duty);
}

// Advances whole 20 kHz PWM periods with ideal commutation, splitting each
// period at its switching edge so the step grid never quantises the duty.
// `on_step` sees (state before, drive, state after, substep length).
template <typename DutyFn, typename OnStep>
MotorState run_pwm(MotorState s, const MotorParams& p, double duration, double max_dt,
                   DutyFn duty_of, OnStep on_step, const StepOptions& opts = {}) {
  constexpr double kPeriod = 1.0 / 20000.0;
  const auto periods = static_cast<long>(std::lround(duration / kPeriod));
  for (long n = 0; n < periods; ++n) {
    const double t0 = n * kPeriod;
    const double duty = duty_of(t0);
    const double edges[3] = {t0, t0 + duty * kPeriod, t0 + kPeriod};
    for (int seg = 0; seg < 2; ++seg) {
      const double span = edges[seg + 1] - edges[seg];
      if (span <= 0.0) continue;
      const int steps = static_cast<int>(std::ceil(span / max_dt - 1e-9));
      for (int k = 0; k < steps; ++k) {
        // Pin the timestamp to the grid so pwm_on() sees the intended level.
        s.timestamp = edges[seg] + k * span / steps;
        const auto drive = ideal_drive(s, p, 16.8, duty);
        const auto next = step_electrical(s, drive, p, span / steps, opts);
        on_step(s, drive, next, span / steps);
        s = next;
      }
    }
  }
  return s;
}

inline void ignore_step(const MotorState&, const PhaseDrive&, const MotorState&, double) {}


struct AuditResult {
  double input = 0.0;   // J drawn from the link
  double copper = 0.0;  // J
  double mech = 0.0;    // J into load and friction
  double balance = 0.0; // J left unexplained
};

// input = copper loss + mechanical output + change in stored energy
// (magnetic and kinetic). Each substep is integrated analytically from the
// RL exponential rather than reusing the plant's bookkeeping.
inline AuditResult energy_audit(double seconds = 1.0) {
  MotorParams p;
  MotorState s;
  s.theta_mech = 60.0 * kDeg / p.pole_pairs;
  const double tau = p.l_phase / p.r_phase;
  const double load = 0.01;
  StepOptions opts;
  opts.load_torque = load;
  AuditResult r;
  auto stored = [&](const MotorState& m) {
    return stored_energy(m, p) + 0.5 * p.rotor_inertia * m.omega_mech * m.omega_mech;
  };
  auto audit = [&](const MotorState& before, const PhaseDrive& drive, const MotorState& after,
                   double dt) {
    const auto hi = static_cast<std::size_t>(drive.high_phase());
    const auto lo = static_cast<std::size_t>(drive.low_phase());
    const double i0 = std::abs(before.phase_currents[hi]) >= std::abs(before.phase_currents[lo])
                          ? before.phase_currents[hi]
                          : -before.phase_currents[lo];
    const double i1 = after.phase_currents[hi];
    // Recover the substep's steady-state target from its endpoints.
    const double decay = std::exp(-dt / tau);
    const double i_ss = (i1 - i0 * decay) / (1.0 - decay);
    const double d = i0 - i_ss;
    const double int_i = i_ss * dt + d * tau * (1.0 - decay);
    const double int_i2 = i_ss * i_ss * dt + 2.0 * i_ss * d * tau * (1.0 - decay) +
                          d * d * 0.5 * tau * (1.0 - decay * decay);
    const double v = drive.pwm_on(before.timestamp + 0.5 * dt) ? 16.8 : 0.0;
    r.input += v * int_i;
    r.copper += 2.0 * p.r_phase * int_i2;
    r.mech += (load + p.friction_coeff * before.omega_mech) * 0.5 *
              (before.omega_mech + after.omega_mech) * dt;
  };
  const double e0 = stored(s);
  s = run_pwm(s, p, seconds, 2.5e-6, [](double t) { return std::min(0.5, 0.05 + t); }, audit, opts);
  r.balance = r.input - r.copper - r.mech - (stored(s) - e0);
  return r;
}

// Relative change of the final speed after a duty ramp when the electrical
// step is halved.
inline double halving_change() {
  MotorParams p;
  MotorState s0;
  s0.theta_mech = 60.0 * kDeg / p.pole_pairs;
  auto duty = [](double t) { return std::min(0.3, 0.05 + 2.0 * t); };
  const double coarse = run_pwm(s0, p, 0.1, 5e-6, duty, ignore_step).omega_mech;
  const double fine = run_pwm(s0, p, 0.1, 2.5e-6, duty, ignore_step).omega_mech;
  return std::abs(coarse - fine) / std::abs(fine);
}

}  // namespace hexastack::oracle
