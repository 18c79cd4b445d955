#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hexastack/airframe/propulsion.hpp"
#include "hexastack/airframe/rigid_body.hpp"
#include "hexastack/airframe/sensors.hpp"
#include "hexastack/bldc/motor.hpp"
#include "hexastack/comm/crc8.hpp"
#include "hexastack/comm/frames.hpp"
#include "hexastack/esc/commutation.hpp"
#include "hexastack/esc/rig.hpp"
#include "hexastack/flight/attitude.hpp"
#include "hexastack/flight/mixer.hpp"

using namespace hexastack;

static void BM_Crc8(benchmark::State& state) {
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(state.range(0)));
  std::mt19937 rng(1);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
  for (auto _ : state) benchmark::DoNotOptimize(comm::crc8(bytes));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Crc8)->Arg(7)->Arg(28)->Arg(256);

static void BM_FrameRoundTrip(benchmark::State& state) {
  std::uint16_t rpm = 0;
  for (auto _ : state) {
    const auto bytes = comm::encode_frame(comm::make_set_speed(3, rpm++));
    benchmark::DoNotOptimize(comm::decode_frame(bytes));
  }
}
BENCHMARK(BM_FrameRoundTrip);

static void BM_MajorityFilter(benchmark::State& state) {
  const std::vector<bool> window{true, false, true, true, false};
  for (auto _ : state) benchmark::DoNotOptimize(esc::majority_filter(window));
}
BENCHMARK(BM_MajorityFilter);

static void BM_MotorStepElectrical(benchmark::State& state) {
  bldc::MotorParams p;
  bldc::MotorState s0;
  s0.omega_mech = 400.0;
  s0.theta_mech = 60.0 * bldc::kPi / 180.0 / p.pole_pairs;
  bldc::MotorState s = s0;
  int n = 0;
  bldc::PhaseDrive d = bldc::PhaseDrive::all_float(16.8);
  d.connection[0] = bldc::Connection::kHigh;
  d.connection[1] = bldc::Connection::kLow;
  d.duty = 0.4;
  for (auto _ : state) {
    // A fixed drive only suits a few microseconds of rotor travel.
    if (++n == 8) {
      s = s0;
      n = 0;
    }
    s = bldc::step_electrical(s, d, p, 2.5e-6);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_MotorStepElectrical);

// One 20 kHz PWM period of firmware plus plant at 4000 rpm under propeller load.
static void BM_EscRigPeriod(benchmark::State& state) {
  esc::RigConfig rc;
  rc.k_drag = airframe::PropulsionParams{}.k_drag;
  esc::EscMotorRig rig(esc::EscConfig{}, bldc::MotorParams{}, rc);
  rig.esc().arm();
  rig.esc().set_target(4000.0);
  rig.run(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(rig.step());
  state.counters["sim_s_per_s"] =
      benchmark::Counter(static_cast<double>(state.iterations()) / 20000.0, benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EscRigPeriod);

static void BM_MixAndSaturate(benchmark::State& state) {
  const flight::MixerGeometry g;
  const flight::MotorLimits lim;
  double r = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(flight::saturate({8800.0, r, -200.0, 400.0}, g, lim));
    r = r > 1000.0 ? 0.0 : r + 1.0;
  }
}
BENCHMARK(BM_MixAndSaturate);

static void BM_FuseImu(benchmark::State& state) {
  flight::AttitudeState s;
  const Eigen::Vector3d accel(0.0, -0.17, -0.98), gyro(1.0, -0.5, 3.0), mag(0.5, 0.0, 0.866);
  for (auto _ : state) {
    s = flight::fuse_imu(accel, gyro, mag, s, 0.005);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_FuseImu);

static void BM_RigidBodyStep(benchmark::State& state) {
  const airframe::VehicleParams v;
  airframe::MotorLoads l;
  l.thrust.fill(v.weight() / 6.0);
  l.thrust[1] += 0.01;
  airframe::RigidBodyState s;
  s.position.z() = -1000.0;
  for (auto _ : state) {
    s = airframe::step_rigid_body(s, l, v, 1e-3);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_RigidBodyStep);

static void BM_SensorSample(benchmark::State& state) {
  airframe::NoiseConfig n;
  n.accel_sigma = 0.003;
  n.gyro_sigma = 0.05;
  n.mag_sigma = 0.003;
  airframe::SensorSynth synth(n, 1);
  airframe::RigidBodyState s;
  for (auto _ : state) benchmark::DoNotOptimize(synth.sample(s));
}
BENCHMARK(BM_SensorSample);
