#pragma once

// Fixed-step scheduler wiring every module. One tick is 1 ms; within a tick
// the order is fixed:
//   1. airframe physics (six propulsion units, then the rigid body)
//   2. sensor synthesis and IMU fusion (every imu period), GPS fix
//   3. IMU link deliveries
//   4. scenario events due, then control (every control period)
//   5. bus transactions (replies polled, queued frames chained back to back)
//   6. battery
// The switched tier resolves each unit's 20 kHz electrical loop inside step 1.

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hexastack/airframe/battery.hpp"
#include "hexastack/airframe/propulsion.hpp"
#include "hexastack/airframe/rigid_body.hpp"
#include "hexastack/airframe/sensors.hpp"
#include "hexastack/comm/bus.hpp"
#include "hexastack/flight/autotune.hpp"
#include "hexastack/flight/controller.hpp"
#include "hexastack/harness/config.hpp"
#include "hexastack/harness/scenario.hpp"
#include "hexastack/harness/telemetry.hpp"

namespace hexastack::harness {

inline constexpr double kTick = 1.0e-3;  // s

struct RunOptions {
  std::optional<bldc::Tier> fidelity;  // overrides the scenario
  std::optional<std::uint64_t> seed;   // overrides the scenario
};

struct RunSummary {
  std::string scenario;
  std::string fidelity;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  double sim_time = 0.0;         // s
  std::string end_reason;        // duration, depleted, fault
  bool depleted = false;
  double depletion_time = 0.0;   // s, when depleted
  double energy_used_wh = 0.0;
  double mean_power_w = 0.0;     // over the whole run
  double hold_time = 0.0;        // s spent holding altitude
  double hold_power_w = 0.0;     // mean draw while holding
  double max_altitude = 0.0;     // m
  std::uint64_t bus_transactions = 0;
  std::uint64_t imu_frames = 0;
  std::uint64_t imu_dropped = 0;
  std::string fault;             // empty unless end_reason == fault
};

struct RunResult {
  RunSummary summary;
  TelemetryLog log;
};

enum class FlightPhase : std::uint8_t { kGround, kClimb, kBrake, kHold, kDescend, kArrest, kLand, kLanded };
const char* to_string(FlightPhase phase);

class Simulation {
 public:
  Simulation(SimConfig config, Scenario scenario, RunOptions options = {});

  /// Advances one tick. Throws SimulationFault on a latched ESC fault or a
  /// non-finite state; telemetry and summary up to the fault stay available.
  void tick();
  bool finished() const { return finished_; }
  /// Ticks until finished.
  void run();

  /// Drives one axis with a relay from now on (autotune experiments).
  void start_relay(flight::Axis axis, const flight::RelayConfig& relay);
  const flight::RelayTuner* relay() const { return relay_ ? &*relay_ : nullptr; }

  double time() const { return static_cast<double>(ticks_) * kTick; }
  const airframe::RigidBodyState& body() const { return body_; }
  const airframe::BatteryState& battery() const { return battery_; }
  const flight::AttitudeState& measured_attitude() const { return measured_; }
  const flight::FlightController& controller() const { return controller_; }
  FlightPhase phase() const { return phase_; }
  double hover_rpm() const { return hover_rpm_; }
  const airframe::PropulsionUnit& unit(int i) const { return *units_.at(static_cast<std::size_t>(i)); }
  const comm::CommandBus& bus() const { return bus_; }

  const TelemetryLog& log() const { return log_; }
  RunSummary summary() const;
  RunResult take_result();

  const SimConfig& config() const { return config_; }
  const Scenario& scenario() const { return scenario_; }

 private:
  struct Queued {
    double t_ready;
    comm::CommandFrame frame;
  };

  void physics();
  void sensors();
  void link();
  void events();
  void apply(const Event& e);
  void control();
  double mission_throttle();
  void bus_phase();
  void battery_phase();
  void queue_all(comm::CommandFrame (*make)(std::uint8_t));
  void marker(double t, const std::string& note);
  TelemetryRow row(double t) const;
  [[noreturn]] void fault(const std::string& what);

  SimConfig config_;
  Scenario scenario_;
  bldc::Tier tier_;
  std::uint64_t seed_;
  airframe::VehicleParams vehicle_;
  std::vector<std::unique_ptr<airframe::PropulsionUnit>> units_;
  airframe::RigidBodyState body_;
  airframe::MotorLoads loads_;
  airframe::BatteryState battery_;
  airframe::SensorSynth synth_;
  airframe::GeoFix gps_;
  flight::AttitudeState estimate_;  // sensor-board estimator
  flight::AttitudeState measured_;  // as delivered to the controller
  std::uint16_t imu_sequence_ = 0;
  comm::CommandBus bus_;
  comm::ImuLink imu_link_;
  flight::FlightController controller_;
  std::optional<flight::ControlOutput> last_output_;
  std::deque<Queued> queue_;
  std::size_t status_cursor_ = 0;

  std::optional<flight::RelayTuner> relay_;
  flight::Axis relay_axis_ = flight::Axis::kRoll;

  // Mission state.
  flight::AttitudeSetpoint mission_;
  FlightPhase phase_ = FlightPhase::kGround;
  double target_alt_ = 0.0;
  double hover_rpm_ = 0.0;
  double forward_until_ = -1.0;
  std::optional<flight::AttitudeSetpoint> manual_;
  double manual_until_ = -1.0;
  std::size_t next_event_ = 0;

  std::uint64_t ticks_ = 0;
  int imu_div_, ctrl_div_, gps_div_;
  std::uint64_t control_steps_ = 0;
  double power_ = 0.0;  // W over the last tick
  double energy_used_j_ = 0.0;
  double hold_energy_j_ = 0.0;
  double hold_time_ = 0.0;
  double max_alt_ = 0.0;
  bool finished_ = false;
  std::string end_reason_;
  std::string fault_;
  double depletion_time_ = 0.0;
  TelemetryLog log_;
};

/// Runs a scenario to completion. Throws SimulationFault.
RunResult run(const Scenario& scenario, const SimConfig& config, const RunOptions& options = {});

struct AutotuneReport {
  std::array<flight::RelayResult, 3> axes;  // roll, pitch, yaw
  SimConfig tuned;
};

/// Relay experiment on each axis with the airframe on a one-axis gimbal,
/// followed by Ziegler-Nichols gains. Throws NoOscillation.
AutotuneReport run_autotune(const SimConfig& config, bldc::Tier tier = bldc::Tier::kAveraged,
                            std::uint64_t seed = 1);

}  // namespace hexastack::harness
