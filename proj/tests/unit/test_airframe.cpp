#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hexastack/airframe/battery.hpp"
#include "hexastack/airframe/propulsion.hpp"
#include "hexastack/airframe/rigid_body.hpp"
#include "hexastack/airframe/sensors.hpp"
#include "hexastack/bldc/motor.hpp"
#include "hexastack/errors.hpp"

using namespace hexastack;
using namespace hexastack::airframe;

namespace {

constexpr double kG = 9.80665;

MotorLoads uniform_loads(double thrust, const PropulsionParams& prop) {
  MotorLoads l;
  l.thrust.fill(thrust);
  l.torque.fill(thrust * prop.k_drag / prop.k_thrust);
  return l;
}

RigidBodyState airborne(double alt = 10.0) {
  RigidBodyState s;
  s.position = {0.0, 0.0, -alt};
  s.on_ground = false;
  return s;
}

}  // namespace

// ---- propulsion --------------------------------------------------------

TEST(PropForces, ZeroSpeedIsZero) {
  const PropForces f = prop_forces(0.0, {});
  EXPECT_EQ(f.thrust, 0.0);
  EXPECT_EQ(f.torque, 0.0);
}

TEST(PropForces, NegativeOrNanThrows) {
  EXPECT_THROW(prop_forces(-1.0, {}), std::invalid_argument);
  EXPECT_THROW(prop_forces(std::nan(""), {}), std::invalid_argument);
}

TEST(PropForces, QuadraticLaw) {
  const PropulsionParams p;
  const PropForces a = prop_forces(300.0, p);
  const PropForces b = prop_forces(600.0, p);
  EXPECT_NEAR(b.thrust / a.thrust, 4.0, 1e-12);
  EXPECT_NEAR(a.torque / a.thrust, p.k_drag / p.k_thrust, 1e-15);
}

TEST(Calibration, FullThrustAnchorIsExact) {
  const CalibrationResult c = calibrate_propulsion(bldc::MotorParams{});
  EXPECT_NEAR(prop_forces(c.omega_full, c.prop).thrust, 9.81, 1e-6);
}

TEST(Calibration, FullDutyCurrentIsNinePointEightAmps) {
  bldc::MotorParams m;
  const CalibrationResult c = calibrate_propulsion(m);
  m.friction_coeff = c.friction;
  const ElectricalPoint e = motor_electrical(c.omega_full, 0.0, m, c.prop);
  EXPECT_NEAR(e.current, 9.8, 0.02 * 9.8);
  EXPECT_NEAR(e.voltage, 16.8, 1e-6);
  EXPECT_NEAR(6.0 * c.full_power, 6.0 * 9.8 * 16.8, 0.02 * 987.84);
}

TEST(Calibration, HoverAnchorWithinFivePercent) {
  const CalibrationResult c = calibrate_propulsion(bldc::MotorParams{});
  EXPECT_NEAR(c.hover_power, 170.0, 0.05 * 170.0);
  EXPECT_NEAR(prop_forces(c.omega_hover, c.prop).thrust, 1.8 * kG / 6.0, 1e-9);
}

TEST(Calibration, ShippedDefaultsAreTheCalibratedValues) {
  const CalibrationResult c = calibrate_propulsion(bldc::MotorParams{});
  const PropulsionParams shipped;
  EXPECT_NEAR(c.prop.k_thrust, shipped.k_thrust, 1e-12 * shipped.k_thrust);
  EXPECT_NEAR(c.prop.k_drag, shipped.k_drag, 1e-12 * shipped.k_drag);
  EXPECT_NEAR(c.friction, bldc::MotorParams{}.friction_coeff, 1e-12);
}

TEST(Calibration, ImpossibleTargetsThrow) {
  CalibrationTargets t;
  t.full_current = 0.01;  // not even enough to overcome the propeller
  EXPECT_THROW(calibrate_propulsion(bldc::MotorParams{}, t), CalibrationFailure);
}

TEST(Calibration, HoverPerMotorThrust) {
  const PropulsionParams p;
  const double w = speed_for_thrust(1.8 * kG / 6.0, p);
  EXPECT_NEAR(prop_forces(w, p).thrust, 1.8 * kG / 6.0, 1e-9);
  EXPECT_NEAR(prop_forces(w, p).thrust, 2.943, 2e-3);
}

TEST(AveragedEsc, FirstOrderLagTowardsTarget) {
  AveragedEsc esc({}, bldc::MotorParams{}, PropulsionParams{});
  esc.handle_frame(comm::encode_frame(comm::make_arm(1)));
  esc.handle_frame(comm::encode_frame(comm::make_set_speed(1, 4000)));
  esc.set_omega(4000.0 * 2.0 * std::numbers::pi / 60.0);
  esc.handle_frame(comm::encode_frame(comm::make_set_speed(1, 4200)));
  double t = 0.0;
  for (int i = 0; i < 20; ++i, t += 1e-3) esc.advance(t, 1e-3);
  // One tau_m (20 ms) covers 63% of the step.
  const double rpm = esc.omega() * 60.0 / (2.0 * std::numbers::pi);
  EXPECT_NEAR((rpm - 4000.0) / 200.0, 1.0 - std::exp(-1.0), 0.02);
  EXPECT_GT(esc.electrical_power(), 0.0);
}

// ---- rigid body --------------------------------------------------------

TEST(RigidBody, HoverEquilibriumStaysPut) {
  const VehicleParams v;
  const PropulsionParams prop;
  const MotorLoads l = uniform_loads(v.weight() / 6.0, prop);
  RigidBodyState s = airborne();
  for (int i = 0; i < 1000; ++i) s = step_rigid_body(s, l, v, 1e-3);
  EXPECT_LT(s.velocity.norm(), 1e-9);
  EXPECT_LT(s.rates.norm(), 1e-9);
}

TEST(RigidBody, OnePercentExcessThrustAcceleratesUp) {
  const VehicleParams v;
  const MotorLoads l = uniform_loads(1.01 * v.weight() / 6.0, {});
  RigidBodyState s = airborne();
  s = step_rigid_body(s, l, v, 1e-3);
  // Velocity is still tiny, so linear drag is negligible.
  EXPECT_NEAR(-s.velocity.z() / 1e-3, 0.01 * kG, 1e-4);
}

TEST(RigidBody, RestsOnGroundBelowWeight) {
  const VehicleParams v;
  RigidBodyState s;
  const MotorLoads l = uniform_loads(0.9 * v.weight() / 6.0, {});
  for (int i = 0; i < 100; ++i) s = step_rigid_body(s, l, v, 1e-3);
  EXPECT_TRUE(s.on_ground);
  EXPECT_EQ(s.position.z(), 0.0);
}

TEST(RigidBody, LiftsOffAboveWeight) {
  const VehicleParams v;
  RigidBodyState s;
  const MotorLoads l = uniform_loads(1.1 * v.weight() / 6.0, {});
  for (int i = 0; i < 100; ++i) s = step_rigid_body(s, l, v, 1e-3);
  EXPECT_FALSE(s.on_ground);
  EXPECT_GT(s.altitude(), 0.0);
}

TEST(RigidBody, RollPatternGivesPureRollMoment) {
  const VehicleParams v;
  const PropulsionParams prop;
  MotorLoads l = uniform_loads(3.0, prop);
  const double d = 0.4;
  for (std::size_t i : {1u, 2u}) l.thrust[i] += d;
  for (std::size_t i : {4u, 5u}) l.thrust[i] -= d;
  for (std::size_t i = 0; i < 6; ++i) l.torque[i] = l.thrust[i] * prop.k_drag / prop.k_thrust;
  const Wrench w = body_wrench(l, v);
  // Cross-product oracle: four motors at lateral offset L sin 60.
  EXPECT_NEAR(w.moment.x(), 4.0 * d * v.arm_length * std::sin(std::numbers::pi / 3.0), 1e-12);
  EXPECT_NEAR(w.moment.y(), 0.0, 1e-9);
  EXPECT_NEAR(w.moment.z(), 0.0, 1e-9);
  EXPECT_NEAR(w.force.z(), -18.0, 1e-12);
}

TEST(RigidBody, PitchPatternGivesPitchUpMoment) {
  const VehicleParams v;
  MotorLoads l = uniform_loads(3.0, {});
  l.thrust[0] += 0.5;  // front arm
  l.thrust[3] -= 0.5;  // rear arm
  const Wrench w = body_wrench(l, v);
  EXPECT_NEAR(w.moment.y(), 2.0 * 0.5 * v.arm_length, 1e-12);
  EXPECT_NEAR(w.moment.x(), 0.0, 1e-12);
}

TEST(RigidBody, EqualSpeedsGiveZeroYawMoment) {
  const Wrench w = body_wrench(uniform_loads(2.943, {}), {});
  EXPECT_NEAR(w.moment.z(), 0.0, 1e-15);
}

TEST(RigidBody, FixedMountDoesNotMove) {
  const VehicleParams v;
  MotorLoads l = uniform_loads(9.81, {});
  l.thrust[1] += 1.0;
  RigidBodyState s;
  for (int i = 0; i < 500; ++i) s = step_rigid_body(s, l, v, 1e-3, Mount::kFixed);
  EXPECT_EQ(s.position, Eigen::Vector3d::Zero());
  EXPECT_LT(s.rates.norm(), 1e-15);
  EXPECT_NEAR(euler_deg(s.attitude).norm(), 0.0, 1e-12);
}

TEST(RigidBody, RollGimbalOnlyRolls) {
  const VehicleParams v;
  MotorLoads l = uniform_loads(2.943, {});
  l.thrust[1] += 0.1;
  l.thrust[0] += 0.1;  // also pitches and yaws if unconstrained
  RigidBodyState s;
  for (int i = 0; i < 300; ++i) s = step_rigid_body(s, l, v, 1e-3, Mount::kGimbalRoll);
  const Eigen::Vector3d e = euler_deg(s.attitude);
  EXPECT_GT(std::abs(e.x()), 0.1);
  EXPECT_NEAR(e.y(), 0.0, 1e-9);
  EXPECT_NEAR(e.z(), 0.0, 1e-9);
  EXPECT_EQ(s.position, Eigen::Vector3d::Zero());
}

TEST(RigidBody, StepHalvingAgreesWithinHalfPercent) {
  // Tumbling body with unequal inertia: gyroscopic coupling exercises the
  // full rotational and translational path.
  const VehicleParams v;
  MotorLoads l = uniform_loads(v.weight() / 6.0, {});
  l.thrust[1] += 0.05;
  l.thrust[0] += 0.03;
  auto run = [&](double dt) {
    RigidBodyState s = airborne(200.0);
    s.rates = {0.5, -0.2, 1.0};
    const int n = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < n; ++i) s = step_rigid_body(s, l, v, dt);
    return s;
  };
  const RigidBodyState coarse = run(2e-3);
  const RigidBodyState fine = run(1e-3);
  EXPECT_LT((coarse.rates - fine.rates).norm() / fine.rates.norm(), 0.005);
  EXPECT_LT((coarse.position - fine.position).norm() / (fine.position - airborne(200.0).position).norm(),
            0.005);
  EXPECT_LT(coarse.attitude.angularDistance(fine.attitude), 0.005);
}

TEST(RigidBody, EulerRoundTrip) {
  const Eigen::Vector3d e = euler_deg(from_euler_deg(12.0, -34.0, 170.0));
  EXPECT_NEAR(e.x(), 12.0, 1e-9);
  EXPECT_NEAR(e.y(), -34.0, 1e-9);
  EXPECT_NEAR(e.z(), 170.0, 1e-9);
}

TEST(RigidBody, NonFiniteLoadsThrow) {
  MotorLoads l;
  l.thrust[2] = std::nan("");
  EXPECT_THROW(step_rigid_body(airborne(), l, {}, 1e-3), NonFiniteState);
}

// ---- sensors -----------------------------------------------------------

TEST(Sensors, LevelStaticNoiseless) {
  SensorSynth synth({}, 1);
  const ImuReading r = synth.sample(RigidBodyState{});
  EXPECT_NEAR((r.accel - Eigen::Vector3d(0, 0, -1)).norm(), 0.0, 1e-15);
  EXPECT_EQ(r.gyro, Eigen::Vector3d::Zero());
}

TEST(Sensors, ThirtyDegreeRollProjection) {
  SensorSynth synth({}, 1);
  RigidBodyState s;
  s.attitude = from_euler_deg(30.0, 0.0, 0.0);
  const ImuReading r = synth.sample(s);
  EXPECT_NEAR(r.accel.x(), 0.0, 1e-12);
  EXPECT_NEAR(r.accel.y(), -0.5, 1e-12);
  EXPECT_NEAR(r.accel.z(), -std::sqrt(3.0) / 2.0, 1e-12);
}

TEST(Sensors, GyroReportsDegreesPerSecond) {
  SensorSynth synth({}, 1);
  RigidBodyState s;
  s.rates = {std::numbers::pi, 0.0, 0.0};
  EXPECT_NEAR(synth.sample(s).gyro.x(), 180.0, 1e-12);
}

TEST(Sensors, SameSeedSameStream) {
  NoiseConfig n;
  n.accel_sigma = 0.01;
  n.gyro_sigma = 0.1;
  n.mag_sigma = 0.01;
  SensorSynth a(n, 77), b(n, 77), c(n, 78);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const ImuReading ra = a.sample({}), rb = b.sample({}), rc = c.sample({});
    ASSERT_EQ(ra.accel, rb.accel);
    ASSERT_EQ(ra.gyro, rb.gyro);
    ASSERT_EQ(ra.mag, rb.mag);
    differs |= ra.accel != rc.accel;
  }
  EXPECT_TRUE(differs);
}

TEST(Gps, OriginAtZero) {
  const GeoOrigin o{45.8, 24.15, 400.0};
  const GeoFix f = gps_stub(RigidBodyState{}, o);
  EXPECT_DOUBLE_EQ(f.lat_deg, 45.8);
  EXPECT_DOUBLE_EQ(f.lon_deg, 24.15);
  EXPECT_DOUBLE_EQ(f.alt_m, 400.0);
}

TEST(Gps, HundredElevenMetresNorthIsOneMillidegree) {
  RigidBodyState s;
  s.position = {111.0, 0.0, 0.0};
  EXPECT_NEAR(gps_stub(s, {}).lat_deg, 0.001, 1e-6);
}

TEST(Gps, AltitudePassthrough) {
  RigidBodyState s;
  s.position = {0.0, 0.0, -10.0};
  EXPECT_DOUBLE_EQ(gps_stub(s, {0.0, 0.0, 400.0}).alt_m, 410.0);
}

// ---- battery -----------------------------------------------------------

TEST(Battery, HundredWattsForThirtySixSecondsIsOneWattHour) {
  const BatteryState b;
  const BatteryState a = battery_step(b, 100.0, 36.0);
  EXPECT_NEAR(b.energy_wh - a.energy_wh, 1.0, 1e-12);
}

TEST(Battery, IdleHourIsUnderOnePercent) {
  BatteryState b;
  for (int i = 0; i < 3600; ++i) b = battery_step(b, 0.85, 1.0);
  const double used = 97.44 - b.energy_wh;
  EXPECT_NEAR(used, 0.85, 1e-9);
  EXPECT_LT(used / 97.44, 0.01);
}

TEST(Battery, FullThrustDepletesInAboutSixMinutes) {
  const double minutes = seconds_to_empty({}, 6.0 * 9.8 * 16.8) / 60.0;
  EXPECT_NEAR(minutes, 97.44 / 987.84 * 60.0, 1e-9);
  EXPECT_NEAR(minutes, 5.9, 0.4);
}

TEST(Battery, ClampsAtEmpty) {
  const BatteryState b = battery_step({}, 1000.0, 3600.0);
  EXPECT_EQ(b.energy_wh, 0.0);
  EXPECT_TRUE(b.depleted());
}

TEST(Battery, NegativePowerThrows) {
  EXPECT_THROW(battery_step({}, -1.0, 1.0), std::invalid_argument);
}
