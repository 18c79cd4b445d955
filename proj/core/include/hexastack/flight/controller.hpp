#pragma once

// 500 Hz attitude loop: command-source arbitration, setpoint prefilter,
// three angle PIDs with rate damping, mixing and SET_SPEED dispatch.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "hexastack/comm/frames.hpp"
#include "hexastack/flight/attitude.hpp"
#include "hexastack/flight/mixer.hpp"
#include "hexastack/flight/pid.hpp"

namespace hexastack::flight {

enum class CommandSource : std::uint8_t { kMission, kManual, kHoverHold };
const char* to_string(CommandSource source);

enum class Axis : std::uint8_t { kRoll = 0, kPitch = 1, kYaw = 2 };

struct AttitudeSetpoint {
  double roll = 0.0;      // deg
  double pitch = 0.0;     // deg
  double yaw = 0.0;       // deg
  double throttle = 0.0;  // rpm
};

struct ControllerConfig {
  std::array<AxisPid, 3> pid{};  // roll, pitch, yaw
  MixerGeometry geometry;
  MotorLimits limits;
  double rate_hz = 500.0;
  double hover_rpm = 4450.0;
  double manual_timeout = 0.2;  // s
  // First-order setpoint filter with time constant kp / ki per axis, which
  // cancels the PID zero; off leaves raw steps on the loop.
  bool prefilter = true;
  std::array<std::uint8_t, 6> addresses{1, 2, 3, 4, 5, 6};

  void validate() const;
};

struct ControlOutput {
  double t = 0.0;
  CommandSource source = CommandSource::kHoverHold;
  AttitudeSetpoint setpoint;   // as requested by the source
  AttitudeSetpoint filtered;   // after the prefilter
  std::array<double, 3> command{};  // roll, pitch, yaw PID outputs
  Setpoints rpm{};
  std::vector<comm::CommandFrame> frames;
};

class FlightController {
 public:
  explicit FlightController(ControllerConfig config);

  void arm();
  void disarm();
  bool armed() const { return armed_; }

  void set_mission(const AttitudeSetpoint& setpoint) { mission_ = setpoint; }
  void clear_mission() { mission_.reset(); }
  const std::optional<AttitudeSetpoint>& mission() const { return mission_; }

  void manual_input(const AttitudeSetpoint& setpoint, double t_received);
  CommandSource active_source(double t_now) const;

  /// Throws DisarmedError when not armed.
  ControlOutput control_step(const AttitudeState& attitude, double t_now);

  /// Replaces an axis' PID output with a fixed command (relay experiments).
  void override_axis(Axis axis, std::optional<double> command);
  void set_gains(Axis axis, const AxisPid& gains);
  const ControllerConfig& config() const { return config_; }
  double period() const { return 1.0 / config_.rate_hz; }

 private:
  AttitudeSetpoint select(double t_now, CommandSource& source) const;

  ControllerConfig config_;
  bool armed_ = false;
  std::optional<AttitudeSetpoint> mission_;
  std::optional<AttitudeSetpoint> manual_;
  double t_manual_ = -1e300;
  std::array<std::optional<double>, 3> override_{};
  std::array<double, 3> filtered_{};
  bool filter_primed_ = false;
};

}  // namespace hexastack::flight
