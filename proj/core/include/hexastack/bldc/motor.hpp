#pragma once

// Lumped three-phase BLDC motor with trapezoidal back-EMF.
//
// Electrical model (star connection, two phases conducting):
//
//   v_high - v_low = 2 R i + 2 L di/dt + (e_high - e_low)
//   e_k            = (kt / 1.5) * omega * bemf_shape_k(theta_e)
//   torque         = sum_k (kt / 1.5) * bemf_shape_k(theta_e) * i_k
//   J domega/dt    = torque - load - friction * omega
//
// The phase shape is the classic trapezoid (120 degree flat tops) with its
// common-mode part removed. A star winding never sees that part, so line
// voltages, currents and torque are those of the trapezoidal motor, while
// the three phase values sum to zero. Across each six-step sector the
// driven pair sees a constant shape difference of 1.5: line back-EMF is
// kt * omega, torque is kt * i and the no-load speed at V is about Kv * V.

#include <array>
#include <cstdint>

namespace hexastack::bldc {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Torque (and back-EMF) constant in N*m/A from a speed constant in rpm/V.
constexpr double torque_constant_from_kv(double kv_rpm_per_volt) {
  return 60.0 / (kTwoPi * kv_rpm_per_volt);
}

constexpr double rpm_to_rad_s(double rpm) { return rpm * kTwoPi / 60.0; }
constexpr double rad_s_to_rpm(double rad_s) { return rad_s * 60.0 / kTwoPi; }

struct MotorParams {
  double kv = 530.0;          // rpm / V
  double r_phase = 0.075;     // ohm
  double l_phase = 10.0e-6;   // H
  double i_max = 10.0;        // A
  double p_rated = 150.0;     // W
  int pole_pairs = 2;
  double kt = torque_constant_from_kv(530.0);  // N*m / A
  double rotor_inertia = 2.0e-5;               // kg*m^2, rotor + propeller
  double friction_coeff = 2.3050110325290612e-05;  // N*m*s / rad

  /// Throws ValidationError when an invariant does not hold.
  void validate() const;

  /// Largest phase current magnitude before the plant reports a fault.
  double fault_current() const { return 1.5 * i_max; }
  double electrical_time_constant() const { return l_phase / r_phase; }
};

struct MotorState {
  double theta_mech = 0.0;  // rad, wrapped to [0, 2*pi)
  double omega_mech = 0.0;  // rad/s
  std::array<double, 3> phase_currents{};  // A, phases A, B, C
  double timestamp = 0.0;                  // s
};

enum class Connection : std::uint8_t { kHigh, kLow, kFloat };

enum class Tier : std::uint8_t { kSwitched, kAveraged };

struct PhaseDrive {
  std::array<Connection, 3> connection{Connection::kFloat, Connection::kFloat,
                                       Connection::kFloat};
  double vdc = 0.0;
  double duty = 0.0;
  double pwm_frequency = 20000.0;

  static PhaseDrive all_float(double vdc);

  /// Exactly one phase high, one low and one floating.
  bool is_six_step() const;
  bool is_all_float() const;
  int high_phase() const;
  int low_phase() const;
  int floating_phase() const;

  /// Switched tier: whether the high-side switch conducts at time t.
  /// PWM is edge aligned, on for the first duty fraction of each period.
  bool pwm_on(double t) const;
};

struct StepOptions {
  Tier tier = Tier::kSwitched;
  double load_torque = 0.0;  // N*m, opposes positive rotation
  bool locked_rotor = false;
};

/// Back-EMF shape of phases A, B, C at an electrical angle, phases 120
/// degrees apart. Phase A peaks at +1 at 90 degrees (where B = C = -0.5) and
/// crosses zero rising at 0 and falling at 180 degrees, each crossing in the
/// middle of the 60 degree sector in which the phase floats.
std::array<double, 3> bemf_shape(double theta_e);

double wrap_angle(double theta);  // into [0, 2*pi)

double electrical_angle(const MotorState& state, const MotorParams& params);

/// Per-phase back-EMF in volts.
std::array<double, 3> back_emf(const MotorState& state, const MotorParams& params);

double electromagnetic_torque(const MotorState& state, const MotorParams& params);

/// Advances the motor by dt with the drive held constant over the step. In
/// the switched tier the PWM level is taken at the step midpoint, so callers
/// that resolve PWM edges must split steps at the edges.
MotorState step_electrical(const MotorState& state, const PhaseDrive& drive,
                           const MotorParams& params, double dt,
                           const StepOptions& options = {});

/// Terminal voltages referenced to the negative rail. Driven phases report
/// their rail; the floating phase reports the star point (reconstructed from
/// the driven terminals) plus its own back-EMF.
std::array<double, 3> terminal_voltage(const MotorState& state, const PhaseDrive& drive,
                                       const MotorParams& params, Tier tier);

/// Current drawn from the DC link (averaged over the PWM period in the
/// averaged tier, instantaneous in the switched tier).
double link_current(const MotorState& state, const PhaseDrive& drive, Tier tier);

/// Instantaneous DC-side power, sum of rail voltage times phase current over
/// the driven phases.
double electrical_power(const MotorState& state, const PhaseDrive& drive,
                        const MotorParams& params, Tier tier);

/// Magnetic energy stored in the phase inductances.
double stored_energy(const MotorState& state, const MotorParams& params);

}  // namespace hexastack::bldc
