#pragma once

// One motor controller: start-up sequencing, zero-crossing detection on the
// floating phase, timer-driven commutation, PI speed control and the bus
// slave interface.
//
// The owner drives it with three calls per PWM period:
//   tick(t, sample, vdc)       at the start of the period
//   drive(vdc)                 switch pattern to apply until the next event
//   commutate(t)               whenever next_commutation_time() comes due
// `sample` is the floating-phase voltage taken at the centre of the previous
// period's on-interval.

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hexastack/bldc/motor.hpp"
#include "hexastack/comm/bus.hpp"
#include "hexastack/esc/commutation.hpp"

namespace hexastack::esc {

struct EscConfig {
  std::uint8_t address = 1;
  double pwm_frequency = 20000.0;  // Hz, also the tick rate
  int speed_loop_divisor = 20;     // PI runs every N ticks
  int majority_window = 5;
  double kp = 5.0e-5;
  double ki = 6.0e-3;
  double align_duty = 0.05;
  double align_time = 0.1;         // s
  double ramp_start_rate = 10.0;   // commutations / s
  double ramp_end_rate = 200.0;    // commutations / s
  double ramp_time = 0.3;          // s
  double ramp_boost = 0.05;        // duty added on top of the back-EMF estimate
  double startup_timeout = 1.0;    // s, align + ramp
  double min_closed_loop_rpm = 1000.0;
  int handoff_sectors = 6;
  int settle_crossings = 12;  // clean crossings before the PI takes over
  int max_missed_crossings = 6;
  double min_vdc = 1.0;
  // Duty is bounded so the predicted peak line current (mean plus half the
  // PWM ripple) stays within this magnitude.
  double current_limit = 12.0;  // A

  void validate() const;
};

// Status flag bits reported by GET_STATUS.
enum StatusFlag : std::uint8_t {
  kFlagArmed = 0x01,
  kFlagClosedLoop = 0x02,
  kFlagUnderspeed = 0x04,
  kFaultStartup = 0x10,
  kFaultDesync = 0x20,
  kFaultOvercurrent = 0x40,
  kFaultNonFinite = 0x80,
};
inline constexpr std::uint8_t kFaultMask = 0xF0;

struct EscSample {
  double t = 0.0;
  double floating_voltage = 0.0;
  double vdc = 0.0;
  int sector = 0;
};

struct EscDiagnostics {
  std::uint64_t commutations = 0;
  std::uint64_t zero_crossings = 0;
  std::uint64_t early_crossings = 0;  // sector opened already past the threshold
  std::uint64_t spurious_crossings = 0;
  std::uint64_t missed_crossings = 0;
  std::optional<double> t_closed_loop;
};

class EscFirmware : public comm::BusSlave {
 public:
  EscFirmware(EscConfig config, bldc::MotorParams motor);

  void tick(double t_now, const std::optional<EscSample>& sample, double vdc);
  void commutate(double t);
  std::optional<double> next_commutation_time() const { return state_.t_next_commutation; }
  bldc::PhaseDrive drive(double vdc) const;

  std::vector<std::uint8_t> handle_frame(std::span<const std::uint8_t> request) override;

  void arm();
  void disarm();
  void set_target(double rpm) { state_.target_speed = rpm; }
  void latch_fault(std::uint8_t fault);

  const CommutationState& state() const { return state_; }
  const EscDiagnostics& diagnostics() const { return diag_; }
  const EscConfig& config() const { return config_; }
  bool armed() const { return armed_; }
  std::uint8_t faults() const { return faults_; }
  std::uint8_t status_flags() const;
  std::uint64_t ticks() const { return ticks_; }
  bool zc_detected_last_tick() const { return zc_flag_; }
  bool pi_active() const { return pi_active_; }

 private:
  void start(double t_now, double vdc);
  void stop();
  void run_startup(double t_now, double vdc);
  void detect(const EscSample& sample);
  void on_detection(double t_zc, bool clean);
  void handoff(double t_zc);
  void reset_detector();
  double ramp_rate(double t_now) const;
  double ramp_duty(double t_now, double vdc) const;
  std::pair<double, double> duty_bounds(double vdc) const;
  std::vector<std::uint8_t> reply(std::uint8_t command,
                                  std::vector<std::uint8_t> payload) const;
  std::vector<std::uint8_t> error_reply(comm::ErrorCode code) const;

  EscConfig config_;
  bldc::MotorParams motor_;
  CommutationState state_;
  EscDiagnostics diag_;
  bool armed_ = false;
  std::uint8_t faults_ = 0;
  bool underspeed_ = false;
  std::uint64_t ticks_ = 0;
  bool zc_flag_ = false;

  int aligned_sector_ = 0;
  double t_startup_begin_ = 0.0;
  double t_mode_start_ = 0.0;

  // Per-sector detector memory.
  bool detected_in_sector_ = false;
  bool have_below_ = false;
  double t_below_ = 0.0;
  double v_below_ = 0.0;
  bool have_above_ = false;
  double t_above_ = 0.0;
  double v_above_ = 0.0;

  int consecutive_zc_sectors_ = 0;
  int clean_crossings_ = 0;
  int missed_in_row_ = 0;
  bool pi_active_ = false;
};

}  // namespace hexastack::esc
