#include "hexastack/bldc/motor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hexastack/errors.hpp"

namespace hexastack::bldc {
namespace {

// (shape_high - shape_low) is constant at this value across a sector.
constexpr double kLineShape = 1.5;

double phase_shape(double x) {
  // x in sixths of an electrical revolution, [0, 6). Piecewise linear
  // through (0,0) (0.5,0.5) (1.5,1) (2.5,0.5) (3.5,-0.5) (4.5,-1) (5.5,-0.5).
  if (x < 0.5) return x;
  if (x < 1.5) return 0.5 + 0.5 * (x - 0.5);
  if (x < 2.5) return 1.0 - 0.5 * (x - 1.5);
  if (x < 3.5) return 0.5 - (x - 2.5);
  if (x < 4.5) return -0.5 - 0.5 * (x - 3.5);
  if (x < 5.5) return -1.0 + 0.5 * (x - 4.5);
  return -0.5 + (x - 5.5);
}

double wrap_sixths(double x) {
  x = std::fmod(x, 6.0);
  if (x < 0.0) x += 6.0;
  if (x >= 6.0) x -= 6.0;
  return x;
}

double bemf_amplitude(const MotorParams& params) { return params.kt / kLineShape; }

// Line current flowing from the high to the low phase. At a commutation one
// of the two phases keeps conducting; its current carries over.
double line_current(const MotorState& state, int high, int low) {
  const double i_high = state.phase_currents[static_cast<std::size_t>(high)];
  const double i_low = -state.phase_currents[static_cast<std::size_t>(low)];
  return std::abs(i_high) >= std::abs(i_low) ? i_high : i_low;
}

double high_rail_voltage(const PhaseDrive& drive, Tier tier, double t) {
  if (tier == Tier::kAveraged) return drive.duty * drive.vdc;
  return drive.pwm_on(t) ? drive.vdc : 0.0;
}

void check_state(const MotorState& s, const MotorParams& params) {
  const bool finite = std::isfinite(s.theta_mech) && std::isfinite(s.omega_mech) &&
                      std::isfinite(s.phase_currents[0]) &&
                      std::isfinite(s.phase_currents[1]) &&
                      std::isfinite(s.phase_currents[2]) && std::isfinite(s.timestamp);
  if (!finite) {
    throw NonFiniteState("motor state became non-finite at t=" + std::to_string(s.timestamp));
  }
  for (double i : s.phase_currents) {
    if (std::abs(i) > params.fault_current()) {
      throw CurrentLimitFault("phase current " + std::to_string(i) + " A exceeds " +
                              std::to_string(params.fault_current()) + " A at t=" +
                              std::to_string(s.timestamp));
    }
  }
}

}  // namespace

void MotorParams::validate() const {
  auto fail = [](const char* key, const std::string& why) {
    throw ValidationError(std::string("motor.") + key + ": " + why);
  };
  if (!(kv > 0.0)) fail("kv", "must be > 0");
  if (!(r_phase > 0.0)) fail("r_phase", "must be > 0");
  if (!(l_phase > 0.0)) fail("l_phase", "must be > 0");
  if (!(i_max > 0.0)) fail("i_max", "must be > 0");
  if (pole_pairs < 1) fail("pole_pairs", "must be >= 1");
  if (!(rotor_inertia > 0.0)) fail("inertia", "must be > 0");
  if (!(friction_coeff >= 0.0)) fail("friction", "must be >= 0");
  const double expected = torque_constant_from_kv(kv);
  if (std::abs(kt - expected) > 1e-9 * expected) {
    fail("kt", "inconsistent with kv (expected " + std::to_string(expected) + ")");
  }
}

PhaseDrive PhaseDrive::all_float(double vdc) {
  PhaseDrive d;
  d.vdc = vdc;
  return d;
}

bool PhaseDrive::is_six_step() const {
  int high = 0, low = 0, flt = 0;
  for (auto c : connection) {
    high += c == Connection::kHigh;
    low += c == Connection::kLow;
    flt += c == Connection::kFloat;
  }
  return high == 1 && low == 1 && flt == 1;
}

bool PhaseDrive::is_all_float() const {
  return std::all_of(connection.begin(), connection.end(),
                     [](Connection c) { return c == Connection::kFloat; });
}

namespace {
int find_phase(const std::array<Connection, 3>& conn, Connection want) {
  for (int k = 0; k < 3; ++k) {
    if (conn[static_cast<std::size_t>(k)] == want) return k;
  }
  return -1;
}
}  // namespace

int PhaseDrive::high_phase() const { return find_phase(connection, Connection::kHigh); }
int PhaseDrive::low_phase() const { return find_phase(connection, Connection::kLow); }
int PhaseDrive::floating_phase() const {
  return is_six_step() ? find_phase(connection, Connection::kFloat) : -1;
}

bool PhaseDrive::pwm_on(double t) const {
  if (duty >= 1.0) return true;
  if (duty <= 0.0) return false;
  const double period = 1.0 / pwm_frequency;
  double phase = std::fmod(t, period) / period;
  if (phase < 0.0) phase += 1.0;
  return phase < duty;
}

std::array<double, 3> bemf_shape(double theta_e) {
  const double x = wrap_sixths(theta_e / (kPi / 3.0));
  return {phase_shape(x), phase_shape(wrap_sixths(x - 2.0)), phase_shape(wrap_sixths(x - 4.0))};
}

double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w -= kTwoPi;
  return w;
}

double electrical_angle(const MotorState& state, const MotorParams& params) {
  return wrap_angle(state.theta_mech * params.pole_pairs);
}

std::array<double, 3> back_emf(const MotorState& state, const MotorParams& params) {
  const auto shape = bemf_shape(electrical_angle(state, params));
  const double scale = bemf_amplitude(params) * state.omega_mech;
  return {scale * shape[0], scale * shape[1], scale * shape[2]};
}

double electromagnetic_torque(const MotorState& state, const MotorParams& params) {
  const auto shape = bemf_shape(electrical_angle(state, params));
  const double a = bemf_amplitude(params);
  double torque = 0.0;
  for (std::size_t k = 0; k < 3; ++k) torque += a * shape[k] * state.phase_currents[k];
  return torque;
}

MotorState step_electrical(const MotorState& state, const PhaseDrive& drive,
                           const MotorParams& params, double dt,
                           const StepOptions& options) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_electrical: dt must be > 0");
  if (!drive.is_six_step() && !drive.is_all_float()) {
    throw std::invalid_argument("step_electrical: drive must be six-step or all-float");
  }

  MotorState next = state;
  next.timestamp = state.timestamp + dt;

  double torque = 0.0;
  if (drive.is_all_float()) {
    next.phase_currents = {0.0, 0.0, 0.0};
  } else {
    const int high = drive.high_phase();
    const int low = drive.low_phase();
    const int flt = drive.floating_phase();
    const auto shape = bemf_shape(electrical_angle(state, params));
    const double a = bemf_amplitude(params);
    const double line_shape = shape[static_cast<std::size_t>(high)] -
                              shape[static_cast<std::size_t>(low)];
    const double e_line = a * line_shape * state.omega_mech;
    const double v_line = high_rail_voltage(drive, options.tier, state.timestamp + 0.5 * dt);

    // Exact RL response to a constant source over the step.
    const double tau = params.l_phase / params.r_phase;
    const double i0 = line_current(state, high, low);
    const double i_ss = (v_line - e_line) / (2.0 * params.r_phase);
    const double decay = std::exp(-dt / tau);
    const double i1 = i_ss + (i0 - i_ss) * decay;
    const double i_mean = i_ss + (i0 - i_ss) * (tau / dt) * (1.0 - decay);

    torque = a * line_shape * i_mean;
    next.phase_currents[static_cast<std::size_t>(high)] = i1;
    next.phase_currents[static_cast<std::size_t>(low)] = -i1;
    next.phase_currents[static_cast<std::size_t>(flt)] = 0.0;
  }

  if (options.locked_rotor) {
    next.omega_mech = 0.0;
  } else {
    const double accel =
        (torque - options.load_torque - params.friction_coeff * state.omega_mech) /
        params.rotor_inertia;
    next.omega_mech = state.omega_mech + dt * accel;
  }
  next.theta_mech = wrap_angle(state.theta_mech + 0.5 * dt * (state.omega_mech + next.omega_mech));

  check_state(next, params);
  return next;
}

std::array<double, 3> terminal_voltage(const MotorState& state, const PhaseDrive& drive,
                                       const MotorParams& params, Tier tier) {
  const auto emf = back_emf(state, params);
  if (!drive.is_six_step()) {
    // Nothing driven: each terminal sits at its back-EMF above a mid-rail bias.
    const double mid = 0.5 * drive.vdc;
    return {mid + emf[0], mid + emf[1], mid + emf[2]};
  }
  const int high = drive.high_phase();
  const int low = drive.low_phase();
  const int flt = drive.floating_phase();
  std::array<double, 3> v{};
  v[static_cast<std::size_t>(high)] = high_rail_voltage(drive, tier, state.timestamp);
  v[static_cast<std::size_t>(low)] = 0.0;
  // Star point from the two driven terminals: the R and L drops of the
  // conducting pair cancel, leaving the mean terminal voltage less the mean
  // back-EMF of the driven phases.
  const auto hi = static_cast<std::size_t>(high);
  const auto lo = static_cast<std::size_t>(low);
  const double neutral = 0.5 * (v[hi] + v[lo]) - 0.5 * (emf[hi] + emf[lo]);
  v[static_cast<std::size_t>(flt)] = neutral + emf[static_cast<std::size_t>(flt)];
  return v;
}

double link_current(const MotorState& state, const PhaseDrive& drive, Tier tier) {
  if (!drive.is_six_step()) return 0.0;
  const double i_high = state.phase_currents[static_cast<std::size_t>(drive.high_phase())];
  if (tier == Tier::kAveraged) return drive.duty * i_high;
  return drive.pwm_on(state.timestamp) ? i_high : 0.0;
}

double electrical_power(const MotorState& state, const PhaseDrive& drive,
                        const MotorParams& params, Tier tier) {
  if (!drive.is_six_step()) return 0.0;
  const auto v = terminal_voltage(state, drive, params, tier);
  double p = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    if (drive.connection[k] != Connection::kFloat) p += v[k] * state.phase_currents[k];
  }
  return p;
}

double stored_energy(const MotorState& state, const MotorParams& params) {
  double sum = 0.0;
  for (double i : state.phase_currents) sum += i * i;
  return 0.5 * params.l_phase * sum;
}

}  // namespace hexastack::bldc
